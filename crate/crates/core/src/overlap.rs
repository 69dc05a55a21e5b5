//! Three-field transverse overlap and Hermite-Gauss expansion of pump profiles.
//!
//! The coupling coefficient of a pump profile `v` with signal and idler modes
//! `u_s`, `u_i` is the normalised overlap
//!
//! ```text
//! Γ = ∬ v u_s u_i dA / ∬ v_00 u_00 u_00 dA
//! ```
//!
//! so the fundamental process (all three fields `HG_00`, pump waist `w/√2`)
//! has `Γ = 1`. Pump superpositions are expanded on the `HG_n0` row.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::hg_modes::{HGMode, TransverseProfile};
use crate::quadrature::{envelope_scale, integrate_plane, DEFAULT_TOLERANCE};

/// Tolerance on `Σ c_n² = 1` for a pump superposition.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Captured-power fraction below which an expansion is flagged as truncated.
pub const TRUNCATION_WARNING_FRACTION: f64 = 0.99;

/// Pump waist for a frequency-doubled pump sharing the signal cavity.
pub fn default_pump_waist(signal_waist: f64) -> f64 {
    signal_waist * FRAC_1_SQRT_2
}

/// Unit-norm real superposition `Σ c_n v_n0` of pump modes on one waist.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSuperposition {
    coefficients: Vec<f64>,
    basis_waist: f64,
}

impl PumpSuperposition {
    pub fn new(coefficients: Vec<f64>, basis_waist: f64) -> Result<Self> {
        if !(basis_waist.is_finite() && basis_waist > 0.0) {
            return Err(Error::param(
                "basis_waist",
                format!("must be positive, got {basis_waist}"),
            ));
        }
        if coefficients.is_empty() {
            return Err(Error::param("coefficients", "at least one coefficient is required"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coefficients", "coefficients must be finite"));
        }
        let norm2: f64 = coefficients.iter().map(|c| c * c).sum();
        if (norm2 - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::param(
                "coefficients",
                format!("squared norm must be 1, got {norm2}"),
            ));
        }
        Ok(Self {
            coefficients,
            basis_waist,
        })
    }

    /// Rescales arbitrary coefficients to unit norm.
    pub fn normalized(coefficients: Vec<f64>, basis_waist: f64) -> Result<Self> {
        let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::param("coefficients", "cannot normalise a zero vector"));
        }
        Self::new(coefficients.into_iter().map(|c| c / norm).collect(), basis_waist)
    }

    /// A single basis mode, `c_order = 1`.
    pub fn pure(order: usize, basis_waist: f64) -> Result<Self> {
        let mut coefficients = vec![0.0; order + 1];
        coefficients[order] = 1.0;
        Self::new(coefficients, basis_waist)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, order: usize) -> f64 {
        self.coefficients.get(order).copied().unwrap_or(0.0)
    }

    pub fn basis_waist(&self) -> f64 {
        self.basis_waist
    }

    /// The basis mode `v_n0` of this superposition's waist.
    pub fn basis_mode(&self, order: usize) -> HGMode {
        HGMode::row(order as u32, self.basis_waist).expect("basis waist validated on construction")
    }

    /// Fraction of pump power carried by the given orders.
    pub fn power_fraction(&self, orders: impl IntoIterator<Item = usize>) -> f64 {
        orders.into_iter().map(|n| self.coefficient(n).powi(2)).sum()
    }

    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coefficients.iter().copied().enumerate().filter(|(_, c)| *c != 0.0)
    }
}

impl TransverseProfile for PumpSuperposition {
    fn amplitude(&self, x: f64, y: f64) -> f64 {
        self.terms().map(|(n, c)| c * self.basis_mode(n).amplitude(x, y)).sum()
    }

    fn waist(&self) -> f64 {
        self.basis_waist
    }
}

/// Wraps a closure as a transverse profile with an explicit envelope waist.
pub struct FnProfile<F> {
    f: F,
    waist: f64,
}

impl<F> FnProfile<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    pub fn new(waist: f64, f: F) -> Self {
        Self { f, waist }
    }
}

impl<F> TransverseProfile for FnProfile<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn amplitude(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    fn waist(&self) -> f64 {
        self.waist
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingResult {
    /// Normalised coupling coefficient Γ.
    pub gamma: f64,
    /// Unnormalised overlap integral (dimension 1/length).
    pub raw_integral: f64,
    /// Γ_n for each basis order of the pump, indexed by order.
    pub per_order: Vec<f64>,
}

/// `∬ v u_s u_i dA` by adaptive Gauss-Hermite quadrature.
pub fn raw_overlap<P>(pump: &P, signal: &HGMode, idler: &HGMode) -> Result<f64>
where
    P: TransverseProfile + ?Sized,
{
    let waist = pump.waist();
    if !(waist.is_finite() && waist > 0.0) {
        return Err(Error::param("pump waist", format!("must be positive, got {waist}")));
    }
    let scale = envelope_scale(&[waist, signal.waist(), idler.waist()]);
    let integral = integrate_plane(scale, DEFAULT_TOLERANCE, |x, y| {
        pump.amplitude(x, y) * signal.amplitude(x, y) * idler.amplitude(x, y)
    })?;
    Ok(integral.value)
}

/// Raw overlap of the fundamental process, `∬ v_00 u_00 u_00 dA`.
pub fn reference_overlap(signal_waist: f64, pump_waist: f64) -> Result<f64> {
    let pump = HGMode::new(0, 0, pump_waist)?;
    let fundamental = HGMode::new(0, 0, signal_waist)?;
    raw_overlap(&pump, &fundamental, &fundamental)
}

/// Normalised coupling coefficient of a pump superposition.
pub fn coupling_coefficient(pump: &PumpSuperposition, signal: &HGMode, idler: &HGMode) -> Result<CouplingResult> {
    let (ws, wi) = (signal.waist(), idler.waist());
    if (ws - wi).abs() > 1e-12 * ws.max(wi) {
        return Err(Error::InvalidConfiguration(format!(
            "signal waist {ws} differs from idler waist {wi}"
        )));
    }
    let reference = reference_overlap(ws, pump.basis_waist())?;
    let raw_integral = raw_overlap(pump, signal, idler)?;
    let per_order = (0..pump.coefficients().len())
        .map(|n| Ok(raw_overlap(&pump.basis_mode(n), signal, idler)? / reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingResult {
        gamma: raw_integral / reference,
        raw_integral,
        per_order,
    })
}

/// Γ_n for each order in `orders`, for a pure `v_n0` pump of the given waist.
pub fn basis_couplings(orders: &[usize], pump_waist: f64, signal: &HGMode, idler: &HGMode) -> Result<Vec<f64>> {
    let reference = reference_overlap(signal.waist(), pump_waist)?;
    orders
        .iter()
        .map(|&n| {
            let mode = HGMode::row(n as u32, pump_waist)?;
            Ok(raw_overlap(&mode, signal, idler)? / reference)
        })
        .collect()
}

/// Projection of a profile onto the `HG_n0` row, without renormalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub coefficients: Vec<f64>,
    pub basis_waist: f64,
    /// `Σ c_n²`
    pub captured_power: f64,
    /// `∬ |profile|² dA`
    pub profile_power: f64,
}

impl Expansion {
    /// Share of the profile's power represented by the retained coefficients.
    pub fn captured_fraction(&self) -> f64 {
        self.captured_power / self.profile_power
    }

    /// Set when the retained orders miss more than 1% of the profile power.
    pub fn truncation_warning(&self) -> bool {
        self.captured_fraction() < TRUNCATION_WARNING_FRACTION
    }

    /// `Σ c_n v_n0(x, y)`
    pub fn synthesize(&self, x: f64, y: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| {
                c * HGMode::row(n as u32, self.basis_waist)
                    .expect("basis waist validated")
                    .amplitude(x, y)
            })
            .sum()
    }

    /// Rescales the retained coefficients to a unit-norm pump.
    pub fn into_superposition(self) -> Result<PumpSuperposition> {
        PumpSuperposition::normalized(self.coefficients, self.basis_waist)
    }
}

/// Expands `profile` on `v_00 … v_{max_order,0}` of the given waist.
pub fn expand_profile<P>(profile: &P, basis_waist: f64, max_order: usize) -> Result<Expansion>
where
    P: TransverseProfile + ?Sized,
{
    if !(basis_waist.is_finite() && basis_waist > 0.0) {
        return Err(Error::param(
            "basis_waist",
            format!("must be positive, got {basis_waist}"),
        ));
    }
    let scale = envelope_scale(&[profile.waist(), basis_waist]);
    let coefficients = (0..=max_order)
        .map(|n| {
            let mode = HGMode::row(n as u32, basis_waist)?;
            let integral = integrate_plane(scale, DEFAULT_TOLERANCE, |x, y| {
                profile.amplitude(x, y) * mode.amplitude(x, y)
            })?;
            Ok(integral.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let power_scale = envelope_scale(&[profile.waist(), profile.waist()]);
    let profile_power = integrate_plane(power_scale, DEFAULT_TOLERANCE, |x, y| profile.amplitude(x, y).powi(2))?.value;
    if profile_power <= 0.0 {
        return Err(Error::Unphysical("profile has zero power".into()));
    }
    let captured_power = coefficients.iter().map(|c| c * c).sum();
    Ok(Expansion {
        coefficients,
        basis_waist,
        captured_power,
        profile_power,
    })
}
