//! Experiment configuration, read from TOML with dotted keys such as
//! `cavity.tau = 4.3e-10` or `eff.eta_hd = 0.81`. Every key is optional; the
//! defaults describe the reference experiment.

use std::path::Path;

use opo_core::opo_model::{CavityParams, EfficiencyChain};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::pump::{parse_signal, PumpSelection};

pub const DEFAULT_ETA_DET: f64 = 0.65;
pub const DEFAULT_ETA_ESC: f64 = 0.79;
pub const DEFAULT_OMEGA_NORM: f64 = 0.18;
pub const DEFAULT_REFERENCE_THRESHOLD_MW: f64 = 510.0;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAJECTORIES: usize = 64;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    cavity: RawCavity,
    #[serde(default)]
    eff: RawEff,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    pump: RawPump,
    #[serde(default)]
    signal: RawSignal,
    #[serde(default)]
    simulation: RawSimulation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    gamma_s: Option<f64>,
    mu: Option<f64>,
    tau: Option<f64>,
    chi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEff {
    eta_prop: Option<f64>,
    eta_hd: Option<f64>,
    eta_phot: Option<f64>,
    eta_esc: Option<f64>,
    eta_det: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    omega_norm: Option<f64>,
    reference_threshold_mw: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    mode: Option<String>,
    coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    seed: Option<u64>,
    trajectories: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cavity: CavityParams,
    /// Drives the analytic spectra; the simulator uses the cavity's own escape.
    pub efficiencies: EfficiencyChain,
    pub omega_norm: f64,
    pub pump_mode: PumpSelection,
    pub reference_threshold_mw: f64,
    pub signal: (u32, u32),
    pub seed: u64,
    pub trajectories: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_toml_str("").expect("defaults are valid")
    }
}

fn unit_interval(path: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(CliError::config(path, format!("must lie in (0, 1], got {value}")))
    }
}

fn positive(path: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::config(path, format!("must be positive, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            CliError::config(if path == "." { "<root>".to_string() } else { path }, message)
        })?;

        let reference = CavityParams::reference_nopa();
        let gamma = raw.cavity.gamma_s.unwrap_or(reference.gamma_s());
        let mu = raw.cavity.mu.unwrap_or(reference.mu());
        let tau = raw.cavity.tau.unwrap_or(reference.tau());
        let chi = raw.cavity.chi.unwrap_or(reference.chi());
        unit_interval("cavity.gamma_s", gamma)?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(CliError::config("cavity.mu", format!("must be non-negative, got {mu}")));
        }
        positive("cavity.tau", tau)?;
        positive("cavity.chi", chi)?;
        let cavity = CavityParams::new(gamma, mu, tau, chi)?;

        let eff = &raw.eff;
        let eta_esc = unit_interval("eff.eta_esc", eff.eta_esc.unwrap_or(DEFAULT_ETA_ESC))?;
        let parts = [
            ("eff.eta_prop", eff.eta_prop),
            ("eff.eta_hd", eff.eta_hd),
            ("eff.eta_phot", eff.eta_phot),
        ];
        let efficiencies = if parts.iter().any(|(_, v)| v.is_some()) {
            if eff.eta_det.is_some() {
                return Err(CliError::config(
                    "eff.eta_det",
                    "give either eta_det or its factors eta_prop, eta_hd, eta_phot, not both",
                ));
            }
            let mut values = [1.0; 3];
            for (slot, (path, value)) in values.iter_mut().zip(parts) {
                if let Some(v) = value {
                    *slot = unit_interval(path, v)?;
                }
            }
            EfficiencyChain::new(values[0], values[1], values[2], eta_esc)?
        } else {
            let eta_det = unit_interval("eff.eta_det", eff.eta_det.unwrap_or(DEFAULT_ETA_DET))?;
            EfficiencyChain::lumped(eta_det, eta_esc)?
        };

        let omega_norm = raw.analysis.omega_norm.unwrap_or(DEFAULT_OMEGA_NORM);
        if !(omega_norm.is_finite() && omega_norm >= 0.0) {
            return Err(CliError::config(
                "analysis.omega_norm",
                format!("must be non-negative, got {omega_norm}"),
            ));
        }
        let reference_threshold_mw = positive(
            "analysis.reference_threshold_mw",
            raw.analysis
                .reference_threshold_mw
                .unwrap_or(DEFAULT_REFERENCE_THRESHOLD_MW),
        )?;

        let pump_mode = match (raw.pump.mode.as_deref(), raw.pump.coefficients) {
            (Some("custom") | None, Some(c)) => {
                let joined: Vec<String> = c.iter().map(f64::to_string).collect();
                format!("custom:{}", joined.join(","))
                    .parse()
                    .map_err(|e: String| CliError::config("pump.coefficients", e))?
            }
            (Some("custom"), None) => {
                return Err(CliError::config(
                    "pump.coefficients",
                    "required when pump.mode = \"custom\"",
                ))
            }
            (Some(mode), None) => mode.parse().map_err(|e: String| CliError::config("pump.mode", e))?,
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "pump.coefficients",
                    "only allowed with pump.mode = \"custom\"",
                ))
            }
            (None, None) => PumpSelection::Optimal,
        };

        let signal = match raw.signal.mode {
            Some(s) => parse_signal(&s).map_err(|e| CliError::config("signal.mode", e))?,
            None => (1, 0),
        };

        let trajectories = raw.simulation.trajectories.unwrap_or(DEFAULT_TRAJECTORIES);
        if trajectories < 2 {
            return Err(CliError::config("simulation.trajectories", "must be at least 2"));
        }

        Ok(Self {
            cavity,
            efficiencies,
            omega_norm,
            pump_mode,
            reference_threshold_mw,
            signal,
            seed: raw.simulation.seed.unwrap_or(DEFAULT_SEED),
            trajectories,
        })
    }

    /// Lossless cavity and detection at zero analysis frequency.
    pub fn ideal(mut self) -> Self {
        self.efficiencies = EfficiencyChain::ideal();
        self.omega_norm = 0.0;
        self
    }

    pub fn with_eta_det(mut self, eta_det: f64) -> Result<Self> {
        if !(eta_det > 0.0 && eta_det <= 1.0) {
            return Err(CliError::usage(format!("--eta-det must lie in (0, 1], got {eta_det}")));
        }
        self.efficiencies = EfficiencyChain::lumped(eta_det, self.efficiencies.eta_esc)?;
        Ok(self)
    }
}
