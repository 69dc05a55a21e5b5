//! Stochastic integration of the linearised signal/idler Langevin equations.
//!
//! Below threshold and without a seed the signal and idler means vanish, so
//! pump fluctuations drop out at first order and the pump enters only through
//! its classical mean. Time is measured in cavity lifetimes `τ/γ'`, where the
//! fluctuation equations for the amplitude and phase quadratures read
//!
//! ```text
//! dX_s = [-X_s + σ (cos φ X_i − sin φ Y_i)] dt + √(2η) dW_s + √(2(1−η)) dV_s
//! dY_s = [-Y_s − σ (sin φ X_i + cos φ Y_i)] dt + √(2η) dW'_s + …
//! ```
//!
//! (and the same with `s ↔ i`), with `η` the escape efficiency. Output fields
//! follow the input-output relation `X_out = √(2η) X − X_in`. Input noise is
//! white with unit spectral density, so a vacuum output has unit spectrum per
//! quadrature.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::opo_model::{correlation_spectrum, CavityParams, EfficiencyChain, Regime};

/// Minimum integration steps per cavity lifetime.
pub const MIN_STEPS_PER_LIFETIME: f64 = 50.0;
/// Default integration steps per cavity lifetime.
pub const DEFAULT_STEPS_PER_LIFETIME: f64 = 100.0;
/// Largest pump ratio accepted by the linearised simulation.
pub const MAX_PUMP_RATIO: f64 = 0.95;
/// Minimum spectral segment length in cavity lifetimes.
pub const MIN_SEGMENT_LIFETIMES: f64 = 20.0;
pub const DEFAULT_SEGMENT_LIFETIMES: f64 = 256.0;
/// Default number of 50%-overlapping segments recorded per trajectory.
pub const DEFAULT_SEGMENTS_PER_TRAJECTORY: usize = 8;

const STEADY_STATE_TOLERANCE: f64 = 1e-12;
const STEADY_STATE_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: CavityParams,
    /// Coupling coefficient Γ of the simulated mode pair.
    pub gamma_coupling: f64,
    /// `p / p_th = σ²`
    pub pump_ratio: f64,
    /// `φ = θ_p − (θ_s + θ_i)`, either 0 or π.
    pub relative_phase: f64,
    /// Integration step in seconds.
    pub dt: f64,
    /// Recorded length of each trajectory in seconds, burn-in excluded.
    pub duration: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    /// Spectral segment length in cavity lifetimes.
    pub segment_lifetimes: f64,
    /// Classical seed amplitude injected into signal and idler (phases 0).
    pub injected_amplitude: f64,
}

impl SimConfig {
    /// Defaults: deamplification, 100 steps per lifetime, 16 trajectories of
    /// eight 256-lifetime segments each.
    pub fn new(params: CavityParams, gamma_coupling: f64, pump_ratio: f64) -> Self {
        let lifetime = params.lifetime();
        let segment_lifetimes = DEFAULT_SEGMENT_LIFETIMES;
        Self {
            params,
            gamma_coupling,
            pump_ratio,
            relative_phase: Regime::Deamplification.relative_phase(),
            dt: lifetime / DEFAULT_STEPS_PER_LIFETIME,
            duration: lifetime * segment_lifetimes * (DEFAULT_SEGMENTS_PER_TRAJECTORY as f64 + 1.0) / 2.0,
            seed: 0,
            n_trajectories: 16,
            segment_lifetimes,
            injected_amplitude: 0.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.n_trajectories = n;
        self
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.relative_phase = regime.relative_phase();
        self
    }

    pub fn with_injected_amplitude(mut self, amplitude: f64) -> Self {
        self.injected_amplitude = amplitude;
        self
    }

    /// Sets the recorded duration to hold `segments` half-overlapping segments.
    pub fn with_segments(mut self, segments: usize) -> Self {
        self.duration = self.params.lifetime() * self.segment_lifetimes * (segments as f64 + 1.0) / 2.0;
        self
    }

    pub fn sigma(&self) -> f64 {
        self.pump_ratio.sqrt()
    }

    pub fn regime(&self) -> Result<Regime> {
        let (sin, cos) = self.relative_phase.sin_cos();
        if sin.abs() > 1e-9 {
            return Err(Error::param(
                "relative_phase",
                format!("must be 0 or π, got {}", self.relative_phase),
            ));
        }
        Ok(if cos > 0.0 {
            Regime::Amplification
        } else {
            Regime::Deamplification
        })
    }

    /// Checks the integration and linearisation constraints.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_coupling.is_finite() && self.gamma_coupling > 0.0) {
            return Err(Error::NoOscillation {
                gamma: self.gamma_coupling,
            });
        }
        if !(self.pump_ratio >= 0.0 && self.pump_ratio <= MAX_PUMP_RATIO) {
            return Err(Error::param(
                "pump_ratio",
                format!("must lie in [0, {MAX_PUMP_RATIO}], got {}", self.pump_ratio),
            ));
        }
        self.regime()?;
        let lifetime = self.params.lifetime();
        if !(self.dt > 0.0 && self.dt <= lifetime / MIN_STEPS_PER_LIFETIME) {
            return Err(Error::param(
                "dt",
                format!(
                    "must be positive and at most τ/(50 γ') = {:.3e} s, got {:.3e} s",
                    lifetime / MIN_STEPS_PER_LIFETIME,
                    self.dt
                ),
            ));
        }
        if !(self.segment_lifetimes >= MIN_SEGMENT_LIFETIMES && self.segment_lifetimes.is_finite()) {
            return Err(Error::param(
                "segment_lifetimes",
                format!(
                    "must be at least {MIN_SEGMENT_LIFETIMES}, got {}",
                    self.segment_lifetimes
                ),
            ));
        }
        if !(self.duration.is_finite() && self.duration >= self.segment_lifetimes * lifetime) {
            return Err(Error::param("duration", "must cover at least one spectral segment"));
        }
        if self.n_trajectories < 2 {
            return Err(Error::param(
                "n_trajectories",
                "at least two trajectories are needed for a standard error",
            ));
        }
        if !self.injected_amplitude.is_finite() {
            return Err(Error::param("injected_amplitude", "must be finite"));
        }
        Ok(())
    }

    fn steps_per_lifetime(&self) -> f64 {
        self.params.lifetime() / self.dt
    }
}

/// Stationary classical amplitudes of the three intracavity fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFields {
    pub pump: Complex64,
    pub signal: Complex64,
    pub idler: Complex64,
}

/// Solves the stationary mean-field equations by fixed-point iteration.
///
/// Without a seed the below-threshold solution is returned directly.
pub fn steady_state(config: &SimConfig) -> Result<MeanFields> {
    if !(config.pump_ratio >= 0.0 && config.pump_ratio < 1.0) {
        return Err(Error::AboveThreshold {
            pump_ratio: config.pump_ratio,
        });
    }
    if !(config.gamma_coupling.is_finite() && config.gamma_coupling > 0.0) {
        return Err(Error::NoOscillation {
            gamma: config.gamma_coupling,
        });
    }
    let p = &config.params;
    let g = p.chi() * config.gamma_coupling;
    let epsilon_th = p.gamma_prime() / g;
    let drive = Complex64::from_polar(config.sigma() * epsilon_th, -config.relative_phase);
    let gamma_p = p.gamma_p();
    let seed = Complex64::new((2.0 * p.gamma_s()).sqrt() * config.injected_amplitude, 0.0);

    let mut pump = drive / gamma_p;
    let mut signal = Complex64::new(0.0, 0.0);
    let mut idler = Complex64::new(0.0, 0.0);
    if config.injected_amplitude == 0.0 {
        return Ok(MeanFields { pump, signal, idler });
    }
    for _ in 0..STEADY_STATE_MAX_ITERATIONS {
        let next_signal = (g * pump * idler.conj() + seed) / p.gamma_prime();
        let next_idler = (g * pump * next_signal.conj() + seed) / p.gamma_prime();
        let next_pump = (drive - g * next_signal * next_idler) / gamma_p;
        let converged = [(next_signal, signal), (next_idler, idler), (next_pump, pump)]
            .iter()
            .all(|(new, old)| (new - old).norm() <= STEADY_STATE_TOLERANCE * new.norm());
        if !(next_signal.norm() + next_idler.norm() + next_pump.norm()).is_finite() {
            return Err(Error::NumericalInstability("mean-field iteration diverged".into()));
        }
        signal = next_signal;
        idler = next_idler;
        pump = next_pump;
        if converged {
            return Ok(MeanFields { pump, signal, idler });
        }
    }
    Err(Error::Convergence {
        iterations: STEADY_STATE_MAX_ITERATIONS,
    })
}

/// Shot-noise-normalised spectrum estimate of one joint quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub omega_norm: f64,
    pub v_estimate: f64,
    /// Standard error of the mean over trajectories.
    pub std_error: f64,
    /// Number of spectral segments averaged.
    pub n_effective: usize,
}

/// All joint-quadrature estimates at one analysis frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpectra {
    pub omega_norm: f64,
    pub regime: Regime,
    /// Mean of the two squeezed combinations (half the inseparability sum).
    pub squeezed: SpectrumEstimate,
    pub squeezed_x: SpectrumEstimate,
    pub squeezed_y: SpectrumEstimate,
    /// Mean of the two conjugate, anti-squeezed combinations.
    pub anti_squeezed: SpectrumEstimate,
}

impl QuadratureSpectra {
    /// Squeezed × anti-squeezed variance, with first-order propagated error.
    pub fn uncertainty_product(&self) -> (f64, f64) {
        let (s, a) = (self.squeezed, self.anti_squeezed);
        let product = s.v_estimate * a.v_estimate;
        let rel = ((s.std_error / s.v_estimate).powi(2) + (a.std_error / a.v_estimate).powi(2)).sqrt();
        (product, product * rel)
    }
}

/// Analytic squeezed variance for the simulated configuration: perfect
/// detection, the cavity's own escape efficiency.
pub fn analytic_squeezed(config: &SimConfig, omega_norm: f64) -> Result<f64> {
    let eff = EfficiencyChain::lumped(1.0, config.params.escape_efficiency())?;
    Ok(correlation_spectrum(config.pump_ratio, omega_norm, &eff, config.regime()?)?.x_variance)
}

/// Simulated squeezed-combination variance at one analysis frequency.
pub fn simulate_spectrum(config: &SimConfig, omega_norm: f64) -> Result<SpectrumEstimate> {
    Ok(simulate_spectra(config, &[omega_norm])?[0].squeezed)
}

// Joint quadrature series, in storage order.
const SQ_X: usize = 0;
const SQ_Y: usize = 1;
const AS_X: usize = 2;
const AS_Y: usize = 3;

struct Plan {
    steps_per_segment: usize,
    hop: usize,
    segments: usize,
    burn_in_steps: usize,
    recorded_steps: usize,
    h: f64,
    /// `w_k e^{-iΩ k h}` for each analysis frequency.
    kernels: Vec<Vec<Complex64>>,
    /// `h / Σ w_k²`, turning `|DFT|²` into a spectral density.
    psd_scale: f64,
}

impl Plan {
    fn new(config: &SimConfig, omegas: &[f64]) -> Self {
        let spl = config.steps_per_lifetime();
        let h = 1.0 / spl;
        let steps_per_segment = (config.segment_lifetimes * spl).round() as usize;
        let hop = steps_per_segment / 2;
        let available = (config.duration / config.dt).floor() as usize;
        let segments = (available - steps_per_segment) / hop + 1;
        let recorded_steps = steps_per_segment + (segments - 1) * hop;
        // long enough for the slowest (anti-squeezed) mode, rate 1 − σ, to forget
        // the zero initial condition
        let relax = (10.0 / (1.0 - config.sigma())).max(MIN_SEGMENT_LIFETIMES);
        let burn_in_steps = (relax * spl).ceil() as usize;

        let n = steps_per_segment as f64;
        let window: Vec<f64> = (0..steps_per_segment)
            .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n).sin().powi(2))
            .collect();
        let window_power: f64 = window.iter().map(|w| w * w).sum();
        let kernels = omegas
            .iter()
            .map(|&omega| {
                window
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| Complex64::from_polar(w, -omega * k as f64 * h))
                    .collect()
            })
            .collect();
        Self {
            steps_per_segment,
            hop,
            segments,
            burn_in_steps,
            recorded_steps,
            h,
            kernels,
            psd_scale: h / window_power,
        }
    }
}

/// Mean periodogram value over one trajectory's segments, indexed
/// `[omega][series]`.
fn run_trajectory(config: &SimConfig, plan: &Plan, regime: Regime, index: usize) -> Result<Vec<[f64; 4]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);

    let sigma = config.sigma();
    let (sin_phi, cos_phi) = config.relative_phase.sin_cos();
    let eta = config.params.escape_efficiency();
    let h = plan.h;
    let coupler = (2.0 * eta).sqrt();
    let coupler_kick = (2.0 * eta * h).sqrt();
    let loss_kick = (2.0 * (1.0 - eta) * h).sqrt();
    let has_loss = eta < 1.0;
    let inv_sqrt_h = 1.0 / h.sqrt();

    // Squeezed combinations: amplification X_s − X_i, Y_s + Y_i; deamplification X_s + X_i, Y_s − Y_i.
    let sign = match regime {
        Regime::Amplification => -1.0,
        Regime::Deamplification => 1.0,
    };

    // state: X_s, Y_s, X_i, Y_i
    let mut state = [0.0_f64; 4];
    let mut series: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(plan.recorded_steps));
    let total = plan.burn_in_steps + plan.recorded_steps;
    for step in 0..total {
        let mut vacuum = [0.0_f64; 4];
        for v in vacuum.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = z;
        }
        let mut loss = [0.0_f64; 4];
        if has_loss {
            for v in loss.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
        if step >= plan.burn_in_steps {
            let out: [f64; 4] = std::array::from_fn(|q| coupler * state[q] - vacuum[q] * inv_sqrt_h);
            let [xs, ys, xi, yi] = out;
            series[SQ_X].push(xs + sign * xi);
            series[SQ_Y].push(ys - sign * yi);
            series[AS_X].push(xs - sign * xi);
            series[AS_Y].push(ys + sign * yi);
        }
        let [xs, ys, xi, yi] = state;
        let drift = [
            -xs + sigma * (cos_phi * xi - sin_phi * yi),
            -ys - sigma * (sin_phi * xi + cos_phi * yi),
            -xi + sigma * (cos_phi * xs - sin_phi * ys),
            -yi - sigma * (sin_phi * xs + cos_phi * ys),
        ];
        for q in 0..4 {
            state[q] += drift[q] * h + coupler_kick * vacuum[q] + loss_kick * loss[q];
        }
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInstability(format!(
            "non-finite field in trajectory {index}"
        )));
    }

    let mut result = vec![[0.0_f64; 4]; plan.kernels.len()];
    for (kernel, acc) in plan.kernels.iter().zip(result.iter_mut()) {
        for (q, values) in series.iter().enumerate() {
            let mut sum = 0.0;
            for seg in 0..plan.segments {
                let start = seg * plan.hop;
                let chunk = &values[start..start + plan.steps_per_segment];
                let dft: Complex64 = kernel.iter().zip(chunk).map(|(k, &y)| k * y).sum();
                sum += dft.norm_sqr() * plan.psd_scale;
            }
            // two quadratures per combination: vacuum level 2
            acc[q] = sum / plan.segments as f64 / 2.0;
        }
    }
    Ok(result)
}

fn estimate(values: impl Iterator<Item = f64> + Clone, omega_norm: f64, n_effective: usize) -> SpectrumEstimate {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    SpectrumEstimate {
        omega_norm,
        v_estimate: mean,
        std_error: (var / n).sqrt(),
        n_effective,
    }
}

/// Simulated joint-quadrature spectra at several analysis frequencies, all
/// estimated from the same trajectories.
///
/// Trajectories run in parallel with per-trajectory RNG streams; results are
/// reduced in trajectory order, so output is bit-identical for a given config.
pub fn simulate_spectra(config: &SimConfig, omegas: &[f64]) -> Result<Vec<QuadratureSpectra>> {
    config.validate()?;
    if omegas.iter().any(|o| !(o.is_finite() && *o >= 0.0)) {
        return Err(Error::param("omega_norm", "analysis frequencies must be non-negative"));
    }
    let regime = config.regime()?;
    let plan = Plan::new(config, omegas);
    let per_trajectory = (0..config.n_trajectories)
        .into_par_iter()
        .map(|index| run_trajectory(config, &plan, regime, index))
        .collect::<Result<Vec<_>>>()?;

    let n_effective = plan.segments * config.n_trajectories;
    Ok(omegas
        .iter()
        .enumerate()
        .map(|(w, &omega)| {
            let series = |f: fn(&[f64; 4]) -> f64| per_trajectory.iter().map(move |t| f(&t[w]));
            QuadratureSpectra {
                omega_norm: omega,
                regime,
                squeezed: estimate(series(|s| 0.5 * (s[SQ_X] + s[SQ_Y])), omega, 2 * n_effective),
                squeezed_x: estimate(series(|s| s[SQ_X]), omega, n_effective),
                squeezed_y: estimate(series(|s| s[SQ_Y]), omega, n_effective),
                anti_squeezed: estimate(series(|s| 0.5 * (s[AS_X] + s[AS_Y])), omega, 2 * n_effective),
            }
        })
        .collect())
}
