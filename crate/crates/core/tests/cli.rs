//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_extinction-lab"));
    cmd.args(args).arg("--out").arg(out);
    match threads {
        Some(n) => cmd.env("EXTINCTION_LAB_THREADS", n),
        None => cmd.env_remove("EXTINCTION_LAB_THREADS"),
    };
    cmd.output().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn validate_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["validate", "--samples", "20000", "--seed", "9"];
    let a = run(&args, &dir.path().join("a"), None);
    let b = run(&args, &dir.path().join("b"), Some("1"));
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(b.status.code(), Some(0));
    let ca = std::fs::read(dir.path().join("a/validate.csv")).unwrap();
    let cb = std::fs::read(dir.path().join("b/validate.csv")).unwrap();
    assert_eq!(ca, cb);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/validate.json")).unwrap())
            .unwrap();
    assert_eq!(report["gate"]["passed"], true);
    assert_eq!(report["mean_check"]["consistent_with"][0], "mgf_derived");
}

#[test]
fn failed_gate_exits_two() {
    // At alpha = 0.99 the critical value is about 0.59 / sqrt(n), which this
    // seed's statistic exceeds.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["validate", "--alpha", "0.99"], dir.path(), None);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL ks"));
}

#[test]
fn configuration_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["validate", "--dist", "normal:0,1"],
        vec!["validate", "--fitness", "2"],
        vec!["validate", "--k", "0"],
        vec!["survival-curve", "--t-grid", "3,2"],
        vec!["validate", "--unknown"],
        vec!["population-lln", "--window", "0.2,0.4"],
    ] {
        let out = run(&args, dir.path(), None);
        assert_eq!(
            out.status.code(),
            Some(3),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = run(&["survival-curve"], dir.path(), Some("zero"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn survival_curve_without_samples_is_analytic_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["survival-curve", "--samples", "0", "--t-grid", "0,1,2,4"],
        dir.path(),
        None,
    );
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("survival-curve.csv"));
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), 6);
        assert!(row[3].is_empty() && row[4].is_empty() && row[5].is_empty());
    }
    let tails: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(tails[0], 1.0);
    assert!(tails.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn phase_sweep_crosses_zero_at_the_critical_fitness() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["phase-sweep", "--samples", "4000", "--horizon", "100"],
        dir.path(),
        None,
    );
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("phase-sweep.csv"));
    let f: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    let defect: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let censored: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    for i in 0..rows.len() {
        if f[i] <= 0.25 {
            assert_eq!(censored[i], 0.0, "f = {}", f[i]);
        }
        if f[i] > 0.5 {
            assert!(defect[i] > 0.0 && censored[i] > 0.0);
        } else {
            assert_eq!(defect[i], 0.0);
        }
    }
    assert!(censored.windows(2).all(|w| w[1] >= w[0] - 0.01));
    assert!(defect.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn asymptotics_ratio_approaches_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["asymptotics"], dir.path(), None);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("asymptotics.csv"));
    let ratio: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(ratio
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs()));
    assert!((ratio.last().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn population_lln_reports_both_normalisations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["population-lln", "--samples", "4", "--horizon", "2000"],
        dir.path(),
        None,
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("population-lln.json")).unwrap())
            .unwrap();
    let pop = &report["population"];
    assert!((pop["mean_rate"].as_f64().unwrap() - 0.4).abs() < 0.04);
    assert!((pop["mean_rate_per_event"].as_f64().unwrap() - 2.0 / 15.0).abs() < 0.015);
    assert_eq!(read_csv(&dir.path().join("population-lln.csv")).len(), 4);
}
