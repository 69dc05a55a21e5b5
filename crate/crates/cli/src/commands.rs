use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use opo_core::langevin::{simulate_spectra, SimConfig};
use opo_core::opo_model::{
    anti_squeezed_variance, correlation_spectrum, enhancement, infer_source_inseparability, inseparability,
    inseparability_from_db, reduction, EfficiencyChain, Regime,
};
use opo_core::pump_optimizer::{optimize_pump, COUPLING_FLOOR};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::pump::{analyze, parse_signal, signal_mode, PumpAnalysis, PumpSelection, OPTIMAL_BASIS_MAX};
use crate::table::{flag, sig6, Table};

/// Largest σ the `simulate` command accepts.
pub const SIMULATE_MAX_SIGMA: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(
    name = "opo",
    version,
    about = "Transverse-mode OPO couplings, thresholds and entanglement spectra"
)]
pub struct Cli {
    /// TOML experiment configuration; built-in defaults otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Also write the result table as CSV.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Lumped detection efficiency, overriding the config.
    #[arg(long, global = true, value_name = "X")]
    pub eta_det: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Amplification,
    Deamplification,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Amplification => Regime::Amplification,
            RegimeArg::Deamplification => Regime::Deamplification,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling coefficient of a pump to a degenerate signal/idler pair.
    Gamma {
        /// hg00, hg20, optimal or custom:c0,c1,...
        #[arg(long)]
        pump: Option<PumpSelection>,
        /// Signal mode, e.g. 10 or hg10.
        #[arg(long, value_parser = parse_signal)]
        signal: Option<(u32, u32)>,
    },
    /// Oscillation thresholds of every pump mode.
    Threshold {
        #[arg(long, value_parser = parse_signal)]
        signal: Option<(u32, u32)>,
    },
    /// Pump superposition maximising the coupling.
    Optimize {
        #[arg(long, value_parser = parse_signal)]
        signal: Option<(u32, u32)>,
        /// Highest HG_n0 pump order in the basis.
        #[arg(long, default_value_t = OPTIMAL_BASIS_MAX)]
        basis_max: usize,
    },
    /// Inseparability against pump power for each pump mode.
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        start_mw: f64,
        /// Defaults to four times the reference threshold.
        #[arg(long)]
        stop_mw: Option<f64>,
        /// Defaults to a fiftieth of the reference threshold.
        #[arg(long)]
        step_mw: Option<f64>,
        /// Perfect escape and detection at zero analysis frequency.
        #[arg(long)]
        ideal: bool,
    },
    /// Inseparability from two measured noise reductions in dB below shot noise.
    Insep {
        #[arg(allow_negative_numbers = true)]
        db_x_sum: f64,
        #[arg(allow_negative_numbers = true)]
        db_y_diff: f64,
        /// Measured V to compare against.
        #[arg(long)]
        reference: Option<f64>,
    },
    /// Langevin simulation of the squeezed spectrum against the analytic one.
    Simulate {
        #[arg(long)]
        sigma: f64,
        /// Defaults to analysis.omega_norm.
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long, value_enum, default_value_t = RegimeArg::Deamplification)]
        regime: RegimeArg,
    },
}

/// What a command prints and what it can write as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub table: Table,
    /// False when a `simulate` run misses its agreement criterion.
    pub passed: bool,
}

impl Output {
    fn new(text: String, table: Table) -> Self {
        Self {
            text,
            table,
            passed: true,
        }
    }
}

fn mode_name((n, m): (u32, u32)) -> String {
    format!("HG{n}{m}")
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match (&cli.command, cli.eta_det) {
        (Command::Insep { .. }, _) | (_, None) => Ok(config),
        (_, Some(eta)) => config.with_eta_det(eta),
    }
}

/// Runs the parsed command and writes its CSV when asked. A failed
/// simulation check still writes its CSV before reporting.
pub fn run(cli: &Cli) -> Result<Output> {
    let config = load_config(cli)?;
    let output = match &cli.command {
        Command::Gamma { pump, signal } => gamma(&config, pump.as_ref(), *signal)?,
        Command::Threshold { signal } => threshold(&config, *signal)?,
        Command::Optimize { signal, basis_max } => optimize(&config, *signal, *basis_max)?,
        Command::Sweep {
            start_mw,
            stop_mw,
            step_mw,
            ideal,
        } => {
            let stop = stop_mw.unwrap_or(4.0 * config.reference_threshold_mw);
            let step = step_mw.unwrap_or(config.reference_threshold_mw / 50.0);
            let config = if *ideal { config.ideal() } else { config };
            let mut out = sweep(&config, &power_grid(*start_mw, stop, step)?)?;
            if cli.csv.is_none() {
                out.text = String::from_utf8(out.table.to_csv()?).expect("CSV is UTF-8");
            }
            out
        }
        Command::Insep {
            db_x_sum,
            db_y_diff,
            reference,
        } => insep(*db_x_sum, *db_y_diff, cli.eta_det, *reference)?,
        Command::Simulate {
            sigma,
            omega,
            seed,
            trajectories,
            regime,
        } => simulate(
            &config,
            *sigma,
            omega.unwrap_or(config.omega_norm),
            seed.unwrap_or(config.seed),
            trajectories.unwrap_or(config.trajectories),
            (*regime).into(),
        )?,
    };
    if let Some(path) = &cli.csv {
        output.table.write_csv(path)?;
    }
    Ok(output)
}

pub fn gamma(config: &ExperimentConfig, pump: Option<&PumpSelection>, signal: Option<(u32, u32)>) -> Result<Output> {
    let mut config = config.clone();
    if let Some(s) = signal {
        config.signal = s;
    }
    let selection = pump.unwrap_or(&config.pump_mode);
    let signal = signal_mode(config.signal)?;
    let pump = selection.superposition(&signal)?;
    let coupling = opo_core::overlap::coupling_coefficient(&pump, &signal, &signal)?;

    let mut table = Table::new(["order", "coefficient", "gamma_n", "contribution"]);
    for (n, (&c, &g)) in pump.coefficients().iter().zip(&coupling.per_order).enumerate() {
        let g = if g.abs() < COUPLING_FLOOR { 0.0 } else { g };
        table.push(vec![n.to_string(), sig6(c), sig6(g), sig6(c * g)]);
    }
    let mut text = format!("pump {selection} -> signal {signal}\n\n");
    text.push_str(&table.render());
    writeln!(text, "\nGamma = {}", sig6(coupling.gamma)).unwrap();
    Ok(Output::new(text, table))
}

fn safe_cell(a: &PumpAnalysis) -> String {
    if a.safe_mw.is_finite() {
        sig6(a.safe_mw)
    } else {
        String::new()
    }
}

pub fn threshold(config: &ExperimentConfig, signal: Option<(u32, u32)>) -> Result<Output> {
    let mut config = config.clone();
    if let Some(s) = signal {
        config.signal = s;
    }
    let mut table = Table::new([
        "pump",
        "gamma",
        "threshold_ratio",
        "threshold_mw",
        "safe_mw",
        "first_oscillator",
    ]);
    for selection in PumpSelection::standard_with(&config.pump_mode) {
        let a = analyze(&config, &selection)?;
        table.push(vec![
            selection.label().to_string(),
            sig6(a.gamma),
            sig6(a.threshold_ratio),
            sig6(a.threshold_mw),
            safe_cell(&a),
            a.first_oscillator.map(mode_name).unwrap_or_default(),
        ]);
    }
    let mut text = format!(
        "signal {}, reference threshold {} mW\n\n",
        mode_name(config.signal),
        sig6(config.reference_threshold_mw)
    );
    text.push_str(&table.render());
    Ok(Output::new(text, table))
}

pub fn optimize(config: &ExperimentConfig, signal: Option<(u32, u32)>, basis_max: usize) -> Result<Output> {
    let mut config = config.clone();
    if let Some(s) = signal {
        config.signal = s;
    }
    let target = signal_mode(config.signal)?;
    let orders: Vec<usize> = (0..=basis_max).collect();
    let result = optimize_pump(&target, &target, &orders)?;
    let mut table = Table::new(["order", "coefficient", "power_fraction", "gamma_n"]);
    for &(n, g) in &result.basis_couplings {
        let c = result.coefficients.coefficient(n);
        table.push(vec![n.to_string(), sig6(c), sig6(c * c), sig6(g)]);
    }
    let p_ref = config.reference_threshold_mw;
    let threshold_mw = p_ref * result.threshold_ratio;
    let mut text = format!("optimal pump for signal {target} over HG_n0, n = 0..={basis_max}\n\n");
    text.push_str(&table.render());
    writeln!(text, "\nGamma_max = {}", sig6(result.gamma_max)).unwrap();
    writeln!(
        text,
        "threshold = {} x reference = {} mW",
        sig6(result.threshold_ratio),
        sig6(threshold_mw)
    )
    .unwrap();
    let hg00 = analyze(&config, &PumpSelection::Hg00)?;
    if hg00.threshold_mw.is_finite() {
        writeln!(
            text,
            "threshold reduction against an HG00 pump: {}%",
            sig6(reduction(hg00.threshold_mw, threshold_mw)?)
        )
        .unwrap();
    }
    let c0 = result.coefficients.coefficient(0);
    if c0 != 0.0 {
        writeln!(
            text,
            "HG00 component at threshold: {} mW (HG00 signal threshold {} mW)",
            sig6(c0 * c0 * threshold_mw),
            sig6(p_ref)
        )
        .unwrap();
    }
    Ok(Output::new(text, table))
}

/// `start, start + step, …` up to and including `stop`.
pub fn power_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(CliError::usage("power range must be finite"));
    }
    if start < 0.0 {
        return Err(CliError::usage(format!("--start-mw must be non-negative, got {start}")));
    }
    if !(step > 0.0) || stop < start {
        return Err(CliError::usage(format!(
            "empty power range: start {start} mW, stop {stop} mW, step {step} mW"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Rows of V against pump power for every pump mode.
///
/// A cell is empty, with its `oscillates` flag set, once the power reaches the
/// target threshold or exceeds the power at which a competing mode starts.
pub fn sweep(config: &ExperimentConfig, powers: &[f64]) -> Result<Output> {
    let analyses = PumpSelection::standard_with(&config.pump_mode)
        .iter()
        .map(|s| analyze(config, s))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["power_mw".to_string(), "pump_ratio".to_string()];
    for a in &analyses {
        header.push(format!("V_{}", a.selection.label()));
        header.push(format!("oscillates_{}", a.selection.label()));
    }
    let mut table = Table::new(header);
    for &p in powers {
        let mut row = vec![sig6(p), sig6(p / config.reference_threshold_mw)];
        for a in &analyses {
            if a.oscillates_at(p) {
                row.push(String::new());
                row.push(flag(true));
            } else {
                let v = inseparability(p / a.threshold_mw, config.omega_norm, &config.efficiencies)?;
                row.push(sig6(v));
                row.push(flag(false));
            }
        }
        table.push(row);
    }
    let mut text = String::new();
    for a in &analyses {
        writeln!(
            text,
            "{:<8} threshold {} mW, competitors start at {} mW",
            a.selection.label(),
            sig6(a.threshold_mw),
            if a.safe_mw.is_finite() {
                sig6(a.safe_mw)
            } else {
                "never".into()
            }
        )
        .unwrap();
    }
    Ok(Output::new(text, table))
}

/// Predicted V of one pump at one power, `None` where it oscillates.
pub fn predicted_v(config: &ExperimentConfig, analysis: &PumpAnalysis, power_mw: f64) -> Result<Option<f64>> {
    if analysis.oscillates_at(power_mw) {
        return Ok(None);
    }
    Ok(Some(inseparability(
        power_mw / analysis.threshold_mw,
        config.omega_norm,
        &config.efficiencies,
    )?))
}

pub fn insep(db_x_sum: f64, db_y_diff: f64, eta_det: Option<f64>, reference: Option<f64>) -> Result<Output> {
    if !(db_x_sum.is_finite() && db_y_diff.is_finite()) {
        return Err(CliError::usage("noise powers must be finite"));
    }
    if let Some(eta) = eta_det {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CliError::usage(format!("--eta-det must lie in (0, 1], got {eta}")));
        }
    }
    let v = inseparability_from_db(db_x_sum, db_y_diff)?;
    let corrected = eta_det.map(|eta| infer_source_inseparability(v, eta)).transpose()?;
    let reference_corrected = match (reference, eta_det) {
        (Some(r), Some(eta)) => Some(infer_source_inseparability(r, eta)?),
        (Some(r), None) => Some(r),
        _ => None,
    };
    let gain = reference_corrected
        .map(|r| enhancement(r, corrected.unwrap_or(v)))
        .transpose()?;

    let opt = |x: Option<f64>| x.map(sig6).unwrap_or_default();
    let mut table = Table::new([
        "db_x_sum",
        "db_y_diff",
        "v",
        "entangled",
        "eta_det",
        "v_corrected",
        "reference_v",
        "enhancement_pct",
    ]);
    table.push(vec![
        sig6(db_x_sum),
        sig6(db_y_diff),
        sig6(v),
        flag(v < 2.0),
        opt(eta_det),
        opt(corrected),
        opt(reference),
        opt(gain),
    ]);

    let mut text = format!("V = {}", sig6(v));
    text.push_str(if v < 2.0 {
        " (entangled)\n"
    } else {
        " (not entangled)\n"
    });
    if let (Some(eta), Some(c)) = (eta_det, corrected) {
        writeln!(text, "corrected for eta_det = {}: V = {}", sig6(eta), sig6(c)).unwrap();
    }
    if let (Some(r), Some(g)) = (reference, gain) {
        writeln!(text, "enhancement against V = {}: {}%", sig6(r), sig6(g)).unwrap();
    }
    Ok(Output::new(text, table))
}

pub fn simulate(
    config: &ExperimentConfig,
    sigma: f64,
    omega: f64,
    seed: u64,
    trajectories: usize,
    regime: Regime,
) -> Result<Output> {
    if !(0.0..SIMULATE_MAX_SIGMA).contains(&sigma) {
        return Err(CliError::usage(format!(
            "--sigma must lie in [0, {SIMULATE_MAX_SIGMA}), got {sigma}"
        )));
    }
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(CliError::usage(format!("--omega must be non-negative, got {omega}")));
    }
    if trajectories < 2 {
        return Err(CliError::usage("--trajectories must be at least 2"));
    }
    let gamma = analyze(config, &config.pump_mode)?.gamma.abs();
    let sim = SimConfig::new(config.cavity, gamma, sigma * sigma)
        .with_seed(seed)
        .with_trajectories(trajectories)
        .with_regime(regime);
    let spectra = simulate_spectra(&sim, &[omega])?[0];
    let eff = EfficiencyChain::lumped(1.0, config.cavity.escape_efficiency())?;
    let analytic = correlation_spectrum(sim.pump_ratio, omega, &eff, regime)?.x_variance;
    let anti = anti_squeezed_variance(sim.pump_ratio, omega, &eff)?;
    let s = spectra.squeezed;
    let tolerance = (0.05 * analytic).max(3.0 * s.std_error);
    let passed = (s.v_estimate - analytic).abs() <= tolerance;

    let mut table = Table::new([
        "sigma",
        "omega_norm",
        "regime",
        "analytic",
        "estimate",
        "std_error",
        "tolerance",
        "anti_analytic",
        "anti_estimate",
        "anti_std_error",
        "n_effective",
        "result",
    ]);
    let verdict = if passed { "PASS" } else { "FAIL" };
    table.push(vec![
        sig6(sigma),
        sig6(omega),
        regime.to_string(),
        sig6(analytic),
        sig6(s.v_estimate),
        sig6(s.std_error),
        sig6(tolerance),
        sig6(anti),
        sig6(spectra.anti_squeezed.v_estimate),
        sig6(spectra.anti_squeezed.std_error),
        s.n_effective.to_string(),
        verdict.to_string(),
    ]);

    let mut text = format!(
        "{regime}, sigma = {}, Omega = {}, {trajectories} trajectories, seed {seed}\n",
        sig6(sigma),
        sig6(omega)
    );
    writeln!(text, "analytic   {}", sig6(analytic)).unwrap();
    writeln!(text, "simulated  {} +/- {}", sig6(s.v_estimate), sig6(s.std_error)).unwrap();
    writeln!(
        text,
        "anti-squeezed analytic {}, simulated {} +/- {}",
        sig6(anti),
        sig6(spectra.anti_squeezed.v_estimate),
        sig6(spectra.anti_squeezed.std_error)
    )
    .unwrap();
    writeln!(text, "{verdict} (tolerance {})", sig6(tolerance)).unwrap();
    Ok(Output { text, table, passed })
}
