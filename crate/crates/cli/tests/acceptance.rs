//! End-to-end acceptance checks. Runs without the libtest harness so that
//! each criterion prints exactly one PASS or FAIL line.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use opo_cli::commands::predicted_v;
use opo_cli::pump::analyze;
use opo_cli::{ExperimentConfig, PumpSelection};
use opo_core::hg_modes::HGMode;
use opo_core::langevin::{analytic_squeezed, simulate_spectra, SimConfig};
use opo_core::opo_model::{
    anti_squeezed_variance, enhancement, infer_source_inseparability, inseparability_from_db, reduction, threshold,
    CavityParams, EfficiencyChain,
};
use opo_core::overlap::{basis_couplings, coupling_coefficient, default_pump_waist, PumpSuperposition};
use opo_core::pump_optimizer::{competing_mode_analysis, default_competitors, optimize_pump};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn close(what: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} ± {tol}"))
    }
}

fn within_time(what: &str, elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

fn fixture_couplings() -> Check {
    let start = Instant::now();
    let w = 0.041;
    let wp = default_pump_waist(w);
    let hg00 = HGMode::row(0, w).map_err(|e| e.to_string())?;
    let hg10 = HGMode::row(1, w).map_err(|e| e.to_string())?;
    let pure = |n: usize| PumpSuperposition::pure(n, wp).map_err(|e| e.to_string());
    let gamma00 = coupling_coefficient(&pure(0)?, &hg00, &hg00)
        .map_err(|e| e.to_string())?
        .gamma;
    close("Γ(00→00)", gamma00, 1.0, 1e-9)?;
    let g = basis_couplings(&[0, 1, 2, 3, 4, 5], wp, &hg10, &hg10).map_err(|e| e.to_string())?;
    close("Γ_0", g[0], 0.5, 1e-9)?;
    close("Γ_2", g[2], FRAC_1_SQRT_2, 1e-9)?;
    for n in [1, 3, 5] {
        close(&format!("Γ_{n}"), g[n], 0.0, 1e-9)?;
    }
    let elapsed = start.elapsed();
    within_time("couplings", elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "Γ00 = {gamma00:.12}, Γ0 = {:.12}, Γ2 = {:.12} in {elapsed:.2?}",
        g[0], g[2]
    ))
}

fn optimal_pump() -> Check {
    let start = Instant::now();
    let target = HGMode::row(1, 1.0).map_err(|e| e.to_string())?;
    let orders: Vec<usize> = (0..=6).collect();
    let r = optimize_pump(&target, &target, &orders).map_err(|e| e.to_string())?;
    let c = r.coefficients.coefficients();
    close("c0²", c[0] * c[0], 1.0 / 3.0, 1e-9)?;
    close("c2²", c[2] * c[2], 2.0 / 3.0, 1e-9)?;
    close("Γ_max", r.gamma_max, 3f64.sqrt() / 2.0, 1e-9)?;

    let g: Vec<f64> = r.basis_couplings.iter().map(|&(_, g)| g).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let v: Vec<f64> = (0..g.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let gamma: f64 = v.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() / norm;
        best = best.max(gamma);
    }
    if best > r.gamma_max + 1e-9 {
        return Err(format!("random pump reached Γ = {best} > Γ_max = {}", r.gamma_max));
    }
    let elapsed = start.elapsed();
    within_time("optimisation", elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "Γ_max = {:.12}, best of 10⁴ random = {best:.6} in {elapsed:.2?}",
        r.gamma_max
    ))
}

fn threshold_ratios() -> Check {
    let config = ExperimentConfig::default();
    let mut summary = Vec::new();
    for (selection, ratio, mw) in [
        (PumpSelection::Hg00, 4.0, 2040.0),
        (PumpSelection::Hg20, 2.0, 1020.0),
        (PumpSelection::Optimal, 4.0 / 3.0, 680.0),
    ] {
        let a = analyze(&config, &selection).map_err(|e| e.to_string())?;
        close(
            &format!("{} ratio", selection.label()),
            a.threshold_ratio / ratio,
            1.0,
            1e-12,
        )?;
        close(&format!("{} threshold mW", selection.label()), a.threshold_mw, mw, 1e-9)?;
        summary.push(format!("{} {:.6} mW", selection.label(), a.threshold_mw));
    }
    Ok(summary.join(", "))
}

fn ideal_endpoints() -> Check {
    let config = ExperimentConfig::default().ideal();
    let hg00 = analyze(&config, &PumpSelection::Hg00).map_err(|e| e.to_string())?;
    let v = predicted_v(&config, &hg00, config.reference_threshold_mw)
        .map_err(|e| e.to_string())?
        .ok_or("hg00 flagged as oscillating at the reference threshold")?;
    close("ideal V(hg00, p_ref)", v, 2.0 / 9.0, 1e-9)?;
    let mut limits = Vec::new();
    for selection in [PumpSelection::Hg20, PumpSelection::Optimal] {
        let a = analyze(&config, &selection).map_err(|e| e.to_string())?;
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let v = predicted_v(&config, &a, a.threshold_mw * (1.0 - eps))
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("{} oscillates below its threshold", selection.label()))?;
            if v.is_nan() || v >= last {
                return Err(format!("{} V not decreasing towards threshold", selection.label()));
            }
            last = v;
        }
        if last > 1e-9 {
            return Err(format!("{} V = {last} just below threshold", selection.label()));
        }
        limits.push(format!("{} {last:.1e}", selection.label()));
    }
    Ok(format!(
        "V(hg00) = {v:.12}; V at 1 − 1e-5 of threshold: {}",
        limits.join(", ")
    ))
}

fn experimental_replication() -> Check {
    let config = ExperimentConfig::default();
    let eta = config.efficiencies.eta_total();
    let omega = config.omega_norm;
    let mut summary = Vec::new();
    for (selection, power, measured) in [
        (PumpSelection::Hg00, 500.0, 1.13),
        (PumpSelection::Hg20, 670.0, 1.04),
        (PumpSelection::Optimal, 670.0, 0.98),
    ] {
        let a = analyze(&config, &selection).map_err(|e| e.to_string())?;
        let v = predicted_v(&config, &a, power)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{} oscillates at {power} mW", selection.label()))?;
        let sigma = (power / a.threshold_mw).sqrt();
        let direct = 2.0 * (1.0 - eta * 4.0 * sigma / ((1.0 + sigma).powi(2) + omega * omega));
        close(&format!("{} formula", selection.label()), v, direct, 1e-12)?;
        close(&format!("{} vs measured", selection.label()), v, measured, 0.08)?;
        summary.push(format!(
            "{} @ {power} mW: {v:.4} (measured {measured})",
            selection.label()
        ));
    }
    Ok(summary.join(", "))
}

fn db_pipeline() -> Check {
    let mut summary = Vec::new();
    for ((x, y), v_want, corrected_want) in [
        ((2.36, 2.56), 1.135, 0.66),
        ((2.92, 2.76), 1.041, 0.52),
        ((3.28, 2.92), 0.981, 0.43),
    ] {
        let v = inseparability_from_db(x, y).map_err(|e| e.to_string())?;
        close(&format!("V({x}, {y})"), v, v_want, 0.005)?;
        let corrected = infer_source_inseparability(v, 0.65).map_err(|e| e.to_string())?;
        close(&format!("corrected V({x}, {y})"), corrected, corrected_want, 0.01)?;
        summary.push(format!("{v:.4}→{corrected:.4}"));
    }
    let gain = enhancement(0.66, 0.43).map_err(|e| e.to_string())?;
    close("enhancement", gain, 53.5, 1.0)?;
    let config = ExperimentConfig::default();
    let hg00 = analyze(&config, &PumpSelection::Hg00).map_err(|e| e.to_string())?;
    let opt = analyze(&config, &PumpSelection::Optimal).map_err(|e| e.to_string())?;
    let cut = reduction(hg00.threshold_mw, opt.threshold_mw).map_err(|e| e.to_string())?;
    close("threshold reduction", cut, 66.7, 0.1)?;
    Ok(format!(
        "{}; enhancement {gain:.2}%, threshold reduction {cut:.2}%",
        summary.join(", ")
    ))
}

fn langevin_oracle() -> Check {
    let start = Instant::now();
    let cavity = CavityParams::from_escape_and_bandwidth(0.06, 1.0, 28.0e6, 1.0).map_err(|e| e.to_string())?;
    let omegas = [0.0, 0.18, 1.0, 3.0];
    let ideal = EfficiencyChain::ideal();
    let mut worst = 0.0f64;
    for sigma in [0.3, 0.5, 0.7, 0.9] {
        let config = SimConfig::new(cavity, 1.0, sigma * sigma)
            .with_seed(42)
            .with_trajectories(64);
        for q in simulate_spectra(&config, &omegas).map_err(|e| e.to_string())? {
            let expected = analytic_squeezed(&config, q.omega_norm).map_err(|e| e.to_string())?;
            let s = q.squeezed;
            let tol = (0.05 * expected).max(3.0 * s.std_error);
            if (s.v_estimate - expected).abs() > tol {
                return Err(format!(
                    "σ={sigma}, Ω={}: {} ± {} vs analytic {expected}",
                    q.omega_norm, s.v_estimate, s.std_error
                ));
            }
            worst = worst.max((s.v_estimate - expected).abs() / tol);
            let (product, se) = q.uncertainty_product();
            if product < 1.0 - 3.0 * se {
                return Err(format!(
                    "σ={sigma}, Ω={}: uncertainty product {product} ± {se}",
                    q.omega_norm
                ));
            }
            let anti = anti_squeezed_variance(sigma * sigma, q.omega_norm, &ideal).map_err(|e| e.to_string())?;
            if q.anti_squeezed.v_estimate <= 1.0 || anti <= 1.0 {
                return Err(format!(
                    "σ={sigma}, Ω={}: anti-squeezed variance not above 1",
                    q.omega_norm
                ));
            }
        }
    }
    let config = SimConfig::new(cavity, 1.0, 0.0).with_seed(42).with_trajectories(64);
    for q in simulate_spectra(&config, &omegas).map_err(|e| e.to_string())? {
        let s = q.squeezed;
        if (s.v_estimate - 1.0).abs() > 3.0 * s.std_error {
            return Err(format!(
                "shot noise at Ω={}: {} ± {}",
                q.omega_norm, s.v_estimate, s.std_error
            ));
        }
    }
    let elapsed = start.elapsed();
    within_time("simulation", elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "16 grid points, worst deviation {:.0}% of tolerance, in {elapsed:.2?}",
        100.0 * worst
    ))
}

fn competition_guard() -> Check {
    let params = CavityParams::reference_nopa();
    let reference = threshold(&params, 1.0).map_err(|e| e.to_string())?.power;
    let target = HGMode::row(1, 1.0).map_err(|e| e.to_string())?;
    let competitors = default_competitors(&target);
    let wp = default_pump_waist(1.0);

    let hg00 = PumpSuperposition::pure(0, wp).map_err(|e| e.to_string())?;
    let r = competing_mode_analysis(&hg00, &target, &competitors, &params).map_err(|e| e.to_string())?;
    close("hg00 achievable p/p_th", r.achievable_pump_ratio, 0.25, 1e-12)?;
    close("hg00 σ_max", r.max_sigma(), 0.5, 1e-12)?;
    let capped = r.achievable_pump_ratio;
    if r.first_oscillator != Some((0, 0)) {
        return Err(format!("hg00 pump: first oscillator {:?}", r.first_oscillator));
    }

    let opt = optimize_pump(&target, &target, &(0..=6).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let r = competing_mode_analysis(&opt.coefficients, &target, &competitors, &params).map_err(|e| e.to_string())?;
    let p00 = r
        .coupled_power_at_target_threshold((0, 0))
        .ok_or("no HG00 entry in the competition report")?;
    close("HG00 component / p_ref", p00 / reference, 4.0 / 9.0, 1e-12)?;
    if !(p00 < reference && r.target_oscillates_first()) {
        return Err("optimal pump does not let the target oscillate first".into());
    }
    Ok(format!(
        "hg00 caps p/p_th at {:.6}; optimal HG00 share at threshold {:.12} p_ref",
        capped,
        p00 / reference
    ))
}

fn run_cli(args: &[&str]) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_opo"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "opo {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn read(path: &Path) -> std::result::Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "cavity.mu = 0.0\nsimulation.seed = 7\nsimulation.trajectories = 16\n",
    )
    .map_err(|e| e.to_string())?;
    let config = config.to_str().ok_or("non-UTF-8 temp path")?;
    let mut sizes = Vec::new();
    for (name, args) in [
        ("sweep", vec!["sweep", "--stop-mw", "1100", "--step-mw", "10"]),
        ("simulate", vec!["simulate", "--sigma", "0.7", "--omega", "0.18"]),
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let csv = dir.path().join(format!("{name}{run}.csv"));
            let csv = csv.to_str().ok_or("non-UTF-8 temp path")?.to_string();
            let mut full = args.clone();
            full.extend(["--config", config, "--csv", &csv]);
            run_cli(&full)?;
            outputs.push(read(Path::new(&csv))?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Err(format!("{name}: CSV differs between runs"));
        }
        sizes.push(format!("{name} {} bytes", outputs[0].len()));
    }
    Ok(format!("identical CSV: {}", sizes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("coupling fixtures", fixture_couplings),
        ("optimal pump", optimal_pump),
        ("threshold ratios", threshold_ratios),
        ("ideal endpoints", ideal_endpoints),
        ("experimental replication", experimental_replication),
        ("dB pipeline", db_pipeline),
        ("Langevin oracle", langevin_oracle),
        ("competition guard", competition_guard),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL {}. {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
