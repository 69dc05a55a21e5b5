//! Pump shaping for a target signal mode.
//!
//! Γ is linear in the pump coefficients, `Γ = Σ c_n Γ_n`, and the coefficients
//! live on the unit sphere, so the maximiser is `c ∝ (Γ_n)` with
//! `Γ_max = ‖Γ‖` (Cauchy-Schwarz). No iterative search is needed.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::hg_modes::HGMode;
use crate::opo_model::{threshold, CavityParams};
use crate::overlap::{basis_couplings, coupling_coefficient, default_pump_waist, PumpSuperposition};

/// Couplings with magnitude below this are quadrature noise on a parity zero.
pub const COUPLING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub coefficients: PumpSuperposition,
    pub gamma_max: f64,
    /// Threshold relative to the fundamental 00→00 process, `1/Γ_max²`.
    pub threshold_ratio: f64,
    /// `(order, Γ_n)` for every requested basis order.
    pub basis_couplings: Vec<(usize, f64)>,
}

/// Unit vector maximising `Σ c_n g_n`, and the maximum `‖g‖`.
///
/// Returns `None` when every entry is zero.
pub fn maximize_on_sphere(couplings: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = couplings.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    Some((couplings.iter().map(|g| g / norm).collect(), norm))
}

/// Pump superposition over `basis_orders` that maximises Γ for the pair.
pub fn optimize_pump(signal: &HGMode, idler: &HGMode, basis_orders: &[usize]) -> Result<OptimizationResult> {
    if basis_orders.is_empty() {
        return Err(Error::param("basis_orders", "at least one order is required"));
    }
    if (signal.waist() - idler.waist()).abs() > 1e-12 * signal.waist() {
        return Err(Error::InvalidConfiguration(format!(
            "signal waist {} differs from idler waist {}",
            signal.waist(),
            idler.waist()
        )));
    }
    let orders: Vec<usize> = basis_orders
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pump_waist = default_pump_waist(signal.waist());
    let gammas: Vec<f64> = basis_couplings(&orders, pump_waist, signal, idler)?
        .into_iter()
        .map(|g| if g.abs() < COUPLING_FLOOR { 0.0 } else { g })
        .collect();
    let (unit, gamma_max) = maximize_on_sphere(&gammas).ok_or(Error::NoCoupling)?;

    let highest = *orders.last().expect("orders non-empty");
    let mut coefficients = vec![0.0; highest + 1];
    for (&n, &c) in orders.iter().zip(&unit) {
        coefficients[n] = c;
    }
    Ok(OptimizationResult {
        coefficients: PumpSuperposition::normalized(coefficients, pump_waist)?,
        gamma_max,
        threshold_ratio: 1.0 / (gamma_max * gamma_max),
        basis_couplings: orders.into_iter().zip(gammas).collect(),
    })
}

/// All modes of strictly lower total order than `target`, on its waist.
pub fn default_competitors(target: &HGMode) -> Vec<HGMode> {
    let mut modes = Vec::new();
    for order in 0..target.order() {
        for n in (0..=order).rev() {
            modes.push(HGMode::new(n, order - n, target.waist()).expect("target waist is valid"));
        }
    }
    modes
}

/// Which transverse mode reaches threshold first under a given pump.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitionReport {
    pub target: (u32, u32),
    /// Total-pump-power threshold of each mode (`∞` when uncoupled).
    pub per_mode_threshold: BTreeMap<(u32, u32), f64>,
    /// Coupling Γ of each mode under this pump.
    pub per_mode_gamma: BTreeMap<(u32, u32), f64>,
    /// Share of pump power in the components that couple to each competitor.
    pub coupled_power_fraction: BTreeMap<(u32, u32), f64>,
    /// `None` only if no mode couples at all.
    pub first_oscillator: Option<(u32, u32)>,
    /// Largest pump power at which no competitor oscillates.
    pub max_safe_pump: f64,
    pub target_threshold: f64,
    /// Usable `p / p_th` for the target, capped at 1.
    pub achievable_pump_ratio: f64,
}

impl CompetitionReport {
    /// `σ_max = √(achievable p/p_th)`.
    pub fn max_sigma(&self) -> f64 {
        self.achievable_pump_ratio.sqrt()
    }

    /// Power in the pump components coupling to `mode` when the pump sits at
    /// the target threshold.
    pub fn coupled_power_at_target_threshold(&self, mode: (u32, u32)) -> Option<f64> {
        self.coupled_power_fraction
            .get(&mode)
            .map(|f| f * self.target_threshold)
    }

    pub fn target_oscillates_first(&self) -> bool {
        self.first_oscillator == Some(self.target)
    }
}

fn mode_threshold(params: &CavityParams, gamma: f64) -> Result<f64> {
    if gamma.abs() < COUPLING_FLOOR {
        Ok(f64::INFINITY)
    } else {
        Ok(threshold(params, gamma.abs())?.power)
    }
}

/// Thresholds of the target and each competitor under `pump`.
///
/// Each mode is treated as a degenerate signal/idler pair on the target waist.
/// A competitor only sees the pump components it overlaps with; its threshold
/// in total pump power is `p_th^{00→00} / Γ²` with Γ from those components.
pub fn competing_mode_analysis(
    pump: &PumpSuperposition,
    target: &HGMode,
    competitors: &[HGMode],
    params: &CavityParams,
) -> Result<CompetitionReport> {
    let mut per_mode_threshold = BTreeMap::new();
    let mut per_mode_gamma = BTreeMap::new();
    let mut coupled_power_fraction = BTreeMap::new();

    let target_gamma = coupling_coefficient(pump, target, target)?.gamma;
    let target_threshold = mode_threshold(params, target_gamma)?;
    per_mode_threshold.insert(target.indices(), target_threshold);
    per_mode_gamma.insert(target.indices(), target_gamma);

    let mut max_safe_pump = f64::INFINITY;
    // ties go to the target
    let mut first: Option<((u32, u32), f64)> = target_threshold
        .is_finite()
        .then_some((target.indices(), target_threshold));
    for mode in competitors {
        if mode.indices() == target.indices() {
            return Err(Error::InvalidConfiguration(format!(
                "competitor {mode} is the target mode"
            )));
        }
        let mode = mode.with_waist(target.waist())?;
        let coupling = coupling_coefficient(pump, &mode, &mode)?;
        let fraction = pump.power_fraction(
            coupling
                .per_order
                .iter()
                .enumerate()
                .filter(|(_, g)| g.abs() >= COUPLING_FLOOR)
                .map(|(n, _)| n),
        );
        let p_th = mode_threshold(params, coupling.gamma)?;
        max_safe_pump = max_safe_pump.min(p_th);
        if p_th.is_finite() && first.is_none_or(|(_, best)| p_th < best) {
            first = Some((mode.indices(), p_th));
        }
        per_mode_threshold.insert(mode.indices(), p_th);
        per_mode_gamma.insert(mode.indices(), coupling.gamma);
        coupled_power_fraction.insert(mode.indices(), fraction);
    }

    let first_oscillator = first.map(|(mode, _)| mode);

    let achievable_pump_ratio = if target_threshold.is_finite() {
        (max_safe_pump / target_threshold).min(1.0)
    } else {
        0.0
    };

    Ok(CompetitionReport {
        target: target.indices(),
        per_mode_threshold,
        per_mode_gamma,
        coupled_power_fraction,
        first_oscillator,
        max_safe_pump,
        target_threshold,
        achievable_pump_ratio,
    })
}
