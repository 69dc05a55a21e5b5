//! Analytic below-threshold model of a non-degenerate OPO.
//!
//! All variances are normalised to shot noise per quadrature, so a vacuum
//! input has variance 1 on every quadrature and the inseparability sum of two
//! joint variances is 2 at the separability boundary.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Cavity loss, round-trip and nonlinearity parameters.
///
/// Signal and idler share coupler loss and extra loss; the pump loss is fixed
/// at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    gamma_s: f64,
    gamma_i: f64,
    mu: f64,
    tau: f64,
    chi: f64,
    gamma_p: f64,
}

impl CavityParams {
    /// `gamma`: output-coupler loss, `mu`: extra intracavity loss,
    /// `tau`: round-trip time in seconds, `chi`: nonlinear coefficient.
    pub fn new(gamma: f64, mu: f64, tau: f64, chi: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::param("gamma_s", format!("must lie in (0, 1], got {gamma}")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", format!("must be non-negative, got {mu}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        if !(chi.is_finite() && chi > 0.0) {
            return Err(Error::param("chi", format!("must be positive, got {chi}")));
        }
        Ok(Self {
            gamma_s: gamma,
            gamma_i: gamma,
            mu,
            tau,
            chi,
            gamma_p: 1.0,
        })
    }

    /// Cavity with the given coupler loss whose extra loss yields `escape`
    /// as escape efficiency, and whose full bandwidth `γ'/τ` is
    /// `2π · bandwidth_hz`.
    pub fn from_escape_and_bandwidth(gamma: f64, escape: f64, bandwidth_hz: f64, chi: f64) -> Result<Self> {
        if !(escape > 0.0 && escape <= 1.0) {
            return Err(Error::param("escape", format!("must lie in (0, 1], got {escape}")));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::param(
                "bandwidth_hz",
                format!("must be positive, got {bandwidth_hz}"),
            ));
        }
        let gamma_prime = gamma / escape;
        let mu = gamma_prime - gamma;
        let tau = gamma_prime / (2.0 * PI * bandwidth_hz);
        Self::new(gamma, mu, tau, chi)
    }

    /// The NOPA of the reference experiment: 6% coupler, escape efficiency
    /// 0.79, 28 MHz bandwidth, unit nonlinearity.
    pub fn reference_nopa() -> Self {
        Self::from_escape_and_bandwidth(0.06, 0.79, 28.0e6, 1.0).expect("constants are valid")
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn gamma_i(&self) -> f64 {
        self.gamma_i
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Total signal/idler loss `γ' = γ + μ`.
    pub fn gamma_prime(&self) -> f64 {
        self.gamma_s + self.mu
    }

    /// `η_esc = γ / γ'`
    pub fn escape_efficiency(&self) -> f64 {
        self.gamma_s / self.gamma_prime()
    }

    /// Cavity amplitude decay rate `γ'/τ` in rad/s.
    pub fn bandwidth_rad(&self) -> f64 {
        self.gamma_prime() / self.tau
    }

    /// Cavity lifetime `τ/γ'` in seconds.
    pub fn lifetime(&self) -> f64 {
        self.tau / self.gamma_prime()
    }

    /// `Ω = ω τ / γ'` for an analysis frequency in Hz.
    pub fn normalized_frequency(&self, frequency_hz: f64) -> f64 {
        2.0 * PI * frequency_hz / self.bandwidth_rad()
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(self.gamma_s, mu, self.tau, self.chi)
    }
}

/// Oscillation threshold of one mode process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// `p_th = γ'² / (χ Γ)²`
    pub power: f64,
    /// `ε^pth = γ' / (χ Γ)`
    pub pump_parameter: f64,
}

pub fn threshold(params: &CavityParams, gamma_coupling: f64) -> Result<Threshold> {
    if !(gamma_coupling.is_finite() && gamma_coupling > 0.0) {
        return Err(Error::NoOscillation { gamma: gamma_coupling });
    }
    let pump_parameter = params.gamma_prime() / (params.chi() * gamma_coupling);
    Ok(Threshold {
        power: pump_parameter * pump_parameter,
        pump_parameter,
    })
}

/// Threshold relative to a process with unit coupling, `1 / Γ²`.
pub fn threshold_ratio(gamma_coupling: f64) -> Result<f64> {
    if !(gamma_coupling.is_finite() && gamma_coupling > 0.0) {
        return Err(Error::NoOscillation { gamma: gamma_coupling });
    }
    Ok(1.0 / (gamma_coupling * gamma_coupling))
}

/// Chain of detection efficiencies plus the cavity escape efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyChain {
    pub eta_prop: f64,
    pub eta_hd: f64,
    pub eta_phot: f64,
    pub eta_esc: f64,
}

impl EfficiencyChain {
    pub fn new(eta_prop: f64, eta_hd: f64, eta_phot: f64, eta_esc: f64) -> Result<Self> {
        for (name, value) in [
            ("eta_prop", eta_prop),
            ("eta_hd", eta_hd),
            ("eta_phot", eta_phot),
            ("eta_esc", eta_esc),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::param(name, format!("must lie in (0, 1], got {value}")));
            }
        }
        Ok(Self {
            eta_prop,
            eta_hd,
            eta_phot,
            eta_esc,
        })
    }

    /// A chain known only through its detection product. The product is
    /// carried in `eta_prop`; the other two detection factors are 1.
    pub fn lumped(eta_det: f64, eta_esc: f64) -> Result<Self> {
        Self::new(eta_det, 1.0, 1.0, eta_esc)
    }

    pub fn ideal() -> Self {
        Self::lumped(1.0, 1.0).expect("unit efficiencies are valid")
    }

    /// `η_det = η_prop η_hd η_phot`
    pub fn eta_det(&self) -> f64 {
        self.eta_prop * self.eta_hd * self.eta_phot
    }

    /// `η_det η_esc`
    pub fn eta_total(&self) -> f64 {
        self.eta_det() * self.eta_esc
    }
}

/// Pump-seed relative phase regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// φ = 0: `X̂ˢ−X̂ⁱ` and `Ŷˢ+Ŷⁱ` are squeezed.
    Amplification,
    /// φ = π: `X̂ˢ+X̂ⁱ` and `Ŷˢ−Ŷⁱ` are squeezed.
    Deamplification,
}

impl Regime {
    pub fn relative_phase(self) -> f64 {
        match self {
            Regime::Amplification => 0.0,
            Regime::Deamplification => PI,
        }
    }

    pub fn squeezed_x_label(self) -> &'static str {
        match self {
            Regime::Amplification => "X_s - X_i",
            Regime::Deamplification => "X_s + X_i",
        }
    }

    pub fn squeezed_y_label(self) -> &'static str {
        match self {
            Regime::Amplification => "Y_s + Y_i",
            Regime::Deamplification => "Y_s - Y_i",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Amplification => f.write_str("amplification"),
            Regime::Deamplification => f.write_str("deamplification"),
        }
    }
}

/// Squeezed joint-quadrature variances at one analysis frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega_norm: f64,
    /// Variance of the squeezed X combination of `regime`.
    pub x_variance: f64,
    /// Variance of the squeezed Y combination of `regime`.
    pub y_variance: f64,
    pub regime: Regime,
}

impl SpectrumPoint {
    pub fn inseparability(&self) -> f64 {
        self.x_variance + self.y_variance
    }
}

fn check_below_threshold(pump_ratio: f64, omega_norm: f64) -> Result<()> {
    if !(pump_ratio.is_finite() && pump_ratio >= 0.0) {
        return Err(Error::param(
            "pump_ratio",
            format!("must be non-negative, got {pump_ratio}"),
        ));
    }
    if pump_ratio >= 1.0 {
        return Err(Error::AboveThreshold { pump_ratio });
    }
    if !(omega_norm.is_finite() && omega_norm >= 0.0) {
        return Err(Error::param(
            "omega_norm",
            format!("must be non-negative, got {omega_norm}"),
        ));
    }
    Ok(())
}

/// `1 − η · 4σ / ((1+σ)² + Ω²)` with `σ = √(p/p_th)`.
fn squeezed(pump_ratio: f64, omega_norm: f64, eta: f64) -> f64 {
    let sigma = pump_ratio.sqrt();
    1.0 - eta * 4.0 * sigma / ((1.0 + sigma).powi(2) + omega_norm * omega_norm)
}

/// Joint-quadrature noise of the squeezed combinations below threshold.
pub fn correlation_spectrum(
    pump_ratio: f64,
    omega_norm: f64,
    eff: &EfficiencyChain,
    regime: Regime,
) -> Result<SpectrumPoint> {
    check_below_threshold(pump_ratio, omega_norm)?;
    let v = squeezed(pump_ratio, omega_norm, eff.eta_total());
    Ok(SpectrumPoint {
        omega_norm,
        x_variance: v,
        y_variance: v,
        regime,
    })
}

/// Variance of the conjugate (anti-squeezed) combinations,
/// `1 + η · 4σ / ((1−σ)² + Ω²)`.
pub fn anti_squeezed_variance(pump_ratio: f64, omega_norm: f64, eff: &EfficiencyChain) -> Result<f64> {
    check_below_threshold(pump_ratio, omega_norm)?;
    let sigma = pump_ratio.sqrt();
    Ok(1.0 + eff.eta_total() * 4.0 * sigma / ((1.0 - sigma).powi(2) + omega_norm * omega_norm))
}

/// Duan inseparability `V = V(X̂ˢ+X̂ⁱ) + V(Ŷˢ−Ŷⁱ)`; `V < 2` certifies entanglement.
pub fn inseparability(pump_ratio: f64, omega_norm: f64, eff: &EfficiencyChain) -> Result<f64> {
    Ok(correlation_spectrum(pump_ratio, omega_norm, eff, Regime::Deamplification)?.inseparability())
}

/// Shot-noise-relative variance of a noise power quoted in dB below shot noise.
pub fn db_below_shot_noise(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Inseparability from the two measured noise reductions (dB below shot noise).
pub fn inseparability_from_db(db_x_sum: f64, db_y_diff: f64) -> Result<f64> {
    if !(db_x_sum.is_finite() && db_y_diff.is_finite()) {
        return Err(Error::param("db", "noise powers must be finite"));
    }
    Ok(db_below_shot_noise(db_x_sum) + db_below_shot_noise(db_y_diff))
}

/// Effect of a detection efficiency on the two-variance sum: each variance
/// mixes with vacuum, `V → η V + 2 (1 − η)`.
pub fn apply_detection_loss(v_source: f64, eta: f64) -> f64 {
    eta * v_source + 2.0 * (1.0 - eta)
}

/// Undoes [`apply_detection_loss`].
pub fn infer_source_inseparability(v_measured: f64, eta_det: f64) -> Result<f64> {
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(Error::param("eta_det", format!("must lie in (0, 1], got {eta_det}")));
    }
    if !v_measured.is_finite() {
        return Err(Error::param("v_measured", "must be finite"));
    }
    let v_source = (v_measured - 2.0 * (1.0 - eta_det)) / eta_det;
    if v_source < 0.0 {
        return Err(Error::Unphysical(format!(
            "measured V = {v_measured} implies source V = {v_source:.4} < 0 at η_det = {eta_det}"
        )));
    }
    Ok(v_source)
}

/// Relative improvement `(v_ref / v_new − 1) · 100` in percent.
pub fn enhancement(v_ref: f64, v_new: f64) -> Result<f64> {
    if !(v_new > 0.0) {
        return Err(Error::NonPositiveDivisor(v_new));
    }
    Ok((v_ref / v_new - 1.0) * 100.0)
}

/// Relative reduction `(1 − new / reference) · 100` in percent.
pub fn reduction(reference: f64, new: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::NonPositiveDivisor(reference));
    }
    Ok((1.0 - new / reference) * 100.0)
}
