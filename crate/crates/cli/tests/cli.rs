use std::path::Path;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;

fn opo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opo")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gamma_line(out: &Output) -> f64 {
    let text = stdout(out);
    let line = text.lines().find(|l| l.starts_with("Gamma = ")).expect("Gamma line");
    line["Gamma = ".len()..].parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gamma_of_the_standard_pumps() {
    let out = opo(&["gamma", "--pump", "hg20", "--signal", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_abs_diff_eq!(gamma_line(&out), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
    assert_abs_diff_eq!(
        gamma_line(&opo(&["gamma", "--pump", "hg00", "--signal", "00"])),
        1.0,
        epsilon = 1e-6
    );
    let custom = opo(&["gamma", "--pump", "custom:0.6,0,0.8", "--signal", "10"]);
    assert_abs_diff_eq!(gamma_line(&custom), 0.865685, epsilon = 1e-6);
}

#[test]
fn bad_invocations_exit_with_two() {
    assert_eq!(opo(&["gamma", "--pump", "hg31"]).status.code(), Some(2));
    assert_eq!(opo(&["gamma", "--pump", "custom:0.6,0.6"]).status.code(), Some(2));
    assert_eq!(opo(&["gamma", "--signal", "x1"]).status.code(), Some(2));
    assert_eq!(opo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        opo(&["sweep", "--start-mw", "10", "--stop-mw", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(opo(&["sweep", "--step-mw", "0"]).status.code(), Some(2));
    assert_eq!(opo(&["simulate", "--sigma", "0.99"]).status.code(), Some(2));
    assert_eq!(opo(&["insep", "1", "1", "--eta-det", "1.5"]).status.code(), Some(2));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[eff]\neta_hd = 1.3\n");
    let out = opo(&["threshold", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eff.eta_hd"));

    let unknown = write(dir.path(), "unknown.toml", "cavity.tua = 1e-9\n");
    let out = opo(&["threshold", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cavity.tua"));

    let missing = dir.path().join("absent.toml");
    assert_eq!(
        opo(&["threshold", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn thresholds_follow_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let config = write(dir.path(), "c.toml", "analysis.reference_threshold_mw = 100\n");
    let out = opo(&["threshold", "--config", &config, "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&csv);
    assert_eq!(rows[0][..4], ["pump", "gamma", "threshold_ratio", "threshold_mw"]);
    let mw: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(mw.len(), 3);
    assert_abs_diff_eq!(mw[0], 400.0, epsilon = 1e-9);
    assert_abs_diff_eq!(mw[1], 200.0, epsilon = 1e-9);
    assert_abs_diff_eq!(mw[2], 133.333, epsilon = 1e-3);
}

#[test]
fn custom_pump_from_config_gets_its_own_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let config = write(
        dir.path(),
        "c.toml",
        "pump.mode = \"custom\"\npump.coefficients = [0.6, 0.0, 0.8]\n",
    );
    let out = opo(&[
        "sweep",
        "--config",
        &config,
        "--stop-mw",
        "100",
        "--step-mw",
        "50",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&csv);
    assert_eq!(rows[0].last().unwrap(), "oscillates_custom");
    assert_eq!(rows.len(), 4);
}

#[test]
fn sweep_is_monotone_until_each_mode_oscillates() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = opo(&[
        "sweep",
        "--stop-mw",
        "1100",
        "--step-mw",
        "10",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(&csv).unwrap();
    assert!(!bytes.contains(&b'\r'));
    let rows = csv_rows(&csv);
    assert_eq!(
        rows[0],
        [
            "power_mw",
            "pump_ratio",
            "V_hg00",
            "oscillates_hg00",
            "V_hg20",
            "oscillates_hg20",
            "V_optimal",
            "oscillates_optimal"
        ]
    );
    assert_eq!(rows.len(), 1 + 111);
    for column in [2, 4, 6] {
        let mut last = f64::INFINITY;
        let mut oscillating = false;
        for row in &rows[1..] {
            if row[column + 1] == "1" {
                assert!(row[column].is_empty());
                oscillating = true;
                continue;
            }
            assert!(!oscillating, "V reappears after oscillation in column {column}");
            let v: f64 = row[column].parse().unwrap();
            assert!(v <= last);
            last = v;
        }
    }
    // hg00 stops at the HG00 threshold, optimal at its own
    let flag_at = |mw: &str, column: usize| rows.iter().find(|r| r[0] == mw).unwrap()[column + 1].clone();
    assert_eq!(flag_at("510.000", 2), "0");
    assert_eq!(flag_at("520.000", 2), "1");
    assert_eq!(flag_at("670.000", 6), "0");
    assert_eq!(flag_at("680.000", 6), "1");
    assert_eq!(flag_at("1010.00", 4), "0");
    assert_eq!(flag_at("1020.00", 4), "1");
}

#[test]
fn sweep_without_csv_prints_it() {
    let out = opo(&["sweep", "--ideal", "--stop-mw", "510", "--step-mw", "510"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "510.000");
    assert_eq!(last[2], "0.222222");
}

#[test]
fn insep_corrections() {
    let out = opo(&["insep", "2.36", "2.56", "--eta-det", "0.65"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("V = 1.13539"), "{text}");
    assert!(text.contains("V = 0.669831"), "{text}");

    let text = stdout(&opo(&["insep", "0", "0"]));
    assert!(text.contains("V = 2.00000 (not entangled)"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("i.csv");
    let out = opo(&[
        "insep",
        "3.28",
        "2.92",
        "--eta-det",
        "0.65",
        "--reference",
        "1.13",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&csv);
    let gain: f64 = rows[1][7].parse().unwrap();
    assert_abs_diff_eq!(gain, 53.5, epsilon = 1.0);
}

#[test]
fn unphysical_correction_exits_with_one() {
    let out = opo(&["insep", "10", "10", "--eta-det", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unphysical"));
}

#[test]
fn simulate_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", "cavity.mu = 0.0\nsimulation.trajectories = 16\n");
    let csv = dir.path().join("sim.csv");
    let out = opo(&[
        "simulate",
        "--config",
        &config,
        "--sigma",
        "0.7",
        "--omega",
        "0.18",
        "--seed",
        "42",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
    let rows = csv_rows(&csv);
    assert_eq!(rows[1][3], "0.0418834");
    assert_eq!(rows[1].last().unwrap(), "PASS");

    let out = opo(&["simulate", "--config", &config, "--sigma", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("analytic   1.00000"));
}

#[test]
fn optimize_prints_the_superposition() {
    let out = opo(&["optimize", "--signal", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Gamma_max = 0.866025"), "{text}");
    assert!(text.contains("680.000 mW"), "{text}");
    assert!(text.contains("66.6667%"), "{text}");
    let odd_basis = opo(&["optimize", "--signal", "10", "--basis-max", "0"]);
    assert_eq!(odd_basis.status.code(), Some(0));
}
