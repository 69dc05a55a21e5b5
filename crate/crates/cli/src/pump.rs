use std::fmt;
use std::str::FromStr;

use opo_core::hg_modes::HGMode;
use opo_core::opo_model::threshold_ratio;
use opo_core::overlap::{coupling_coefficient, default_pump_waist, PumpSuperposition};
use opo_core::pump_optimizer::{competing_mode_analysis, default_competitors, optimize_pump, COUPLING_FLOOR};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Highest HG_n0 pump order considered by `optimal`.
pub const OPTIMAL_BASIS_MAX: usize = 6;

/// Signal and idler waist; Γ does not depend on it.
const SIGNAL_WAIST: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PumpSelection {
    Hg00,
    Hg20,
    Optimal,
    Custom(Vec<f64>),
}

impl PumpSelection {
    pub fn label(&self) -> &'static str {
        match self {
            PumpSelection::Hg00 => "hg00",
            PumpSelection::Hg20 => "hg20",
            PumpSelection::Optimal => "optimal",
            PumpSelection::Custom(_) => "custom",
        }
    }

    pub fn superposition(&self, signal: &HGMode) -> Result<PumpSuperposition> {
        let waist = default_pump_waist(signal.waist());
        Ok(match self {
            PumpSelection::Hg00 => PumpSuperposition::pure(0, waist)?,
            PumpSelection::Hg20 => PumpSuperposition::pure(2, waist)?,
            PumpSelection::Optimal => {
                let orders: Vec<usize> = (0..=OPTIMAL_BASIS_MAX).collect();
                optimize_pump(signal, signal, &orders)?.coefficients
            }
            PumpSelection::Custom(c) => {
                PumpSuperposition::new(c.clone(), waist).map_err(|e| CliError::usage(format!("custom pump: {e}")))?
            }
        })
    }

    /// The three standard pumps, followed by `extra` when it is custom.
    pub fn standard_with(extra: &PumpSelection) -> Vec<PumpSelection> {
        let mut all = vec![PumpSelection::Hg00, PumpSelection::Hg20, PumpSelection::Optimal];
        if matches!(extra, PumpSelection::Custom(_)) {
            all.push(extra.clone());
        }
        all
    }
}

impl fmt::Display for PumpSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PumpSelection::Custom(c) => {
                let parts: Vec<String> = c.iter().map(f64::to_string).collect();
                write!(f, "custom:{}", parts.join(","))
            }
            other => f.write_str(other.label()),
        }
    }
}

impl FromStr for PumpSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "hg00" => return Ok(PumpSelection::Hg00),
            "hg20" => return Ok(PumpSelection::Hg20),
            "optimal" | "opt" => return Ok(PumpSelection::Optimal),
            _ => {}
        }
        let Some(list) = lower.strip_prefix("custom:") else {
            return Err(format!(
                "unknown pump mode `{s}` (expected hg00, hg20, optimal or custom:c0,c1,...)"
            ));
        };
        let coefficients = list
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad coefficient `{c}` in `{s}`"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let norm: f64 = coefficients.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(format!(
                "custom pump coefficients must have unit norm, got Σc² = {norm}"
            ));
        }
        // renormalise away the rounding in hand-typed coefficients
        let scale = norm.sqrt();
        Ok(PumpSelection::Custom(
            coefficients.into_iter().map(|c| c / scale).collect(),
        ))
    }
}

/// Parses `10`, `hg10` or `1,0` into mode indices.
pub fn parse_signal(s: &str) -> std::result::Result<(u32, u32), String> {
    let t = s.trim().to_ascii_lowercase();
    let t = t.strip_prefix("hg").unwrap_or(&t);
    let bad = || format!("bad signal mode `{s}` (expected e.g. 10, hg10 or 1,0)");
    if let Some((n, m)) = t.split_once(',') {
        return Ok((
            n.trim().parse().map_err(|_| bad())?,
            m.trim().parse().map_err(|_| bad())?,
        ));
    }
    let digits: Vec<u32> = t
        .chars()
        .map(|c| c.to_digit(10))
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    match digits[..] {
        [n, m] => Ok((n, m)),
        _ => Err(bad()),
    }
}

pub fn signal_mode((n, m): (u32, u32)) -> Result<HGMode> {
    Ok(HGMode::new(n, m, SIGNAL_WAIST)?)
}

/// Threshold and competition summary of one pump for the configured signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpAnalysis {
    pub selection: PumpSelection,
    pub pump: PumpSuperposition,
    pub gamma: f64,
    /// Γ_n of each basis order the pump is built from.
    pub per_order: Vec<f64>,
    /// `p_th / p_th^{00→00}`
    pub threshold_ratio: f64,
    pub threshold_mw: f64,
    /// Highest pump power at which no lower-order mode oscillates.
    pub safe_mw: f64,
    pub first_oscillator: Option<(u32, u32)>,
}

impl PumpAnalysis {
    /// Below this power the target is the only mode that can be pumped.
    pub fn oscillates_at(&self, power_mw: f64) -> bool {
        power_mw >= self.threshold_mw || power_mw > self.safe_mw
    }
}

pub fn analyze(config: &ExperimentConfig, selection: &PumpSelection) -> Result<PumpAnalysis> {
    let signal = signal_mode(config.signal)?;
    let pump = selection.superposition(&signal)?;
    let coupling = coupling_coefficient(&pump, &signal, &signal)?;
    let gamma = coupling.gamma;
    if !(gamma.abs() >= COUPLING_FLOOR) {
        return Err(opo_core::Error::NoOscillation { gamma }.into());
    }
    let ratio = threshold_ratio(gamma.abs())?;
    let report = competing_mode_analysis(&pump, &signal, &default_competitors(&signal), &config.cavity)?;
    // anchored on Γ ratios so that e.g. a Γ = 1 competitor sits at exactly the reference power
    let mut safe_mw = f64::INFINITY;
    for (mode, g) in &report.per_mode_gamma {
        if *mode != signal.indices() && g.abs() >= COUPLING_FLOOR {
            safe_mw = safe_mw.min(config.reference_threshold_mw * threshold_ratio(g.abs())?);
        }
    }
    Ok(PumpAnalysis {
        selection: selection.clone(),
        pump,
        gamma,
        per_order: coupling.per_order,
        threshold_ratio: ratio,
        threshold_mw: config.reference_threshold_mw * ratio,
        safe_mw,
        first_oscillator: report.first_oscillator,
    })
}
