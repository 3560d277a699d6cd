use std::fs;
use std::path::Path;
use std::process::Command;

use meanflow_cli::experiment::{checkpoint_name, realization_dir, resolve_output};
use meanflow_cli::{parse_config, run_ensemble, run_experiment, verify, CliError, ExperimentConfig};
use meanflow_core::solver::read_checkpoint;
use serde_json::{json, Value};

fn config(value: Value) -> ExperimentConfig {
    parse_config(&value.to_string()).unwrap()
}

fn golden() -> ExperimentConfig {
    parse_config(include_str!("data/full_config.json")).unwrap()
}

fn stokes(t_end: f64) -> Value {
    json!({
        "domain": {"dimension": 2, "resolution": 16},
        "physics": {"viscosity": 0.05},
        "time": {"dt": 0.01, "t_end": t_end, "sample_stride": 5},
        "initial": {"kind": "modes", "modes": [{"k": [1, 2], "amplitude": [[-2.0, 0.0], [1.0, 0.0]]}]},
        "forcing": {"kind": "steady", "field": {"kind": "zero"}}
    })
}

fn csv_rows(dir: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(dir.join("series.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# meanflow-series 1"));
    assert_eq!(lines.next(), Some("t,energy,grad_sq,work_rate,f_dual_sq"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn zero_horizon_gives_one_row_and_na_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(stokes(0.0)), dir.path()).unwrap();
    assert_eq!(csv_rows(dir.path()).len(), 1);
    assert_eq!(out.report.status, "n/a");
    assert!(out.report.per_horizon.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "n/a");
    assert!(verify(dir.path()).unwrap().passed());
}

#[test]
fn stokes_energy_column_is_analytic() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(stokes(2.0)), dir.path()).unwrap();
    let rows = csv_rows(dir.path());
    assert_eq!(rows.len(), 41);
    let e0 = rows[0][1];
    let rate = 2.0 * 0.05 * 5.0;
    for row in &rows {
        let exact = e0 * (-rate * row[0]).exp();
        assert!((row[1] - exact).abs() <= 1e-12 * exact, "t = {}: {} vs {exact}", row[0], row[1]);
    }
}

#[test]
fn golden_run_is_byte_identical_and_verifies() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = golden();
    run_experiment(&c, a.path()).unwrap();
    run_experiment(&c, b.path()).unwrap();
    let mut names = vec!["series.csv".to_string(), "report.json".to_string()];
    names.extend(c.averaging.horizons.iter().map(|&h| checkpoint_name(h)));
    for name in &names {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let summary = verify(a.path()).unwrap();
    for check in &summary.checks {
        assert!(check.passed, "{check}");
    }
    assert!(summary.checks.iter().any(|c| c.name == "a-priori bounds"));
}

#[test]
fn checkpoints_hold_the_horizon_state() {
    let dir = tempfile::tempdir().unwrap();
    let c = golden();
    let out = run_experiment(&c, dir.path()).unwrap();
    let last = *c.averaging.horizons.last().unwrap();
    let file = fs::File::open(dir.path().join(checkpoint_name(last))).unwrap();
    let cp = read_checkpoint(file).unwrap();
    assert_eq!(cp.state.t, last);
    assert_eq!(cp.config_echo, c.echo());
    assert_eq!(cp.state.v.l2_sq(), out.samples.last().unwrap().energy);
}

#[test]
fn corrupted_eps_fails_the_closure_identity() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&golden(), dir.path()).unwrap();
    let path = dir.path().join("report.json");
    let mut report: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let eps = report["per_horizon"][1]["dissipation"]["eps"].as_f64().unwrap();
    report["per_horizon"][1]["dissipation"]["eps"] = json!(eps * 1.01 + 1e-3);
    fs::write(&path, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let summary = verify(dir.path()).unwrap();
    assert!(!summary.passed());
    let failed: Vec<_> = summary.checks.iter().filter(|c| !c.passed).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].name, "closure identity");
    assert!(failed[0].location.contains("t=2"));
}

#[test]
fn empty_directory_has_no_reports() {
    let dir = tempfile::tempdir().unwrap();
    let summary = verify(dir.path()).unwrap();
    assert!(!summary.passed());
    assert_eq!(summary.checks.len(), 1);
    assert_eq!(summary.checks[0].name, "no reports found");
}

#[test]
fn unknown_schema_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(stokes(1.0)), dir.path()).unwrap();
    let path = dir.path().join("report.json");
    let text = fs::read_to_string(&path).unwrap().replace("meanflow-report/1", "meanflow-report/9");
    fs::write(&path, text).unwrap();
    let summary = verify(dir.path()).unwrap();
    assert!(!summary.passed());
    assert!(summary.checks[0].name.starts_with("known schema version"));
}

#[test]
fn output_root_applies_to_relative_directories() {
    let mut c = golden();
    assert_eq!(resolve_output(&c, Some(Path::new("/data"))), Path::new("/data/golden"));
    assert_eq!(resolve_output(&c, None), Path::new("golden"));
    c.output.directory = "/abs/out".into();
    assert_eq!(resolve_output(&c, Some(Path::new("/data"))), Path::new("/abs/out"));
}

#[test]
fn small_ensemble_writes_indexed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(json!({
        "domain": {"dimension": 2, "resolution": 16},
        "physics": {"viscosity": 0.1},
        "time": {"dt": 0.01, "t_end": 2.0, "sample_stride": 10},
        "forcing": {"kind": "steady", "field": {"kind": "shear", "wavenumber": 1, "amplitude": 0.5}},
        "ensemble": {"n": 4, "amplitude": 0.2},
        "seed": 5
    }));
    let out = run_ensemble(&c, dir.path()).unwrap();
    assert_eq!(out.report.n, 4);
    assert_eq!(out.report.cauchy_increments.len(), 3);
    for i in 0..4 {
        assert!(dir.path().join("realizations").join(realization_dir(i)).join("report.json").is_file());
    }
    let summary = verify(dir.path()).unwrap();
    for name in ["ensemble closure identity", "ensemble dissipativity", "uniform bound on mean gradients"] {
        let check = summary.checks.iter().find(|c| c.name == name).unwrap();
        assert!(check.passed, "{check}");
    }
    assert_eq!(summary.checks.iter().filter(|c| c.name == "closure identity").count(), 4);
}

#[test]
fn blow_up_is_its_own_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = stokes(1.0);
    v["forcing"]["field"] = json!({"kind": "shear", "wavenumber": 1, "amplitude": 1e300});
    let err = run_experiment(&config(v), dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(dir.path().join("checkpoint_last_finite.bin").is_file());
    assert!(matches!(err, CliError::Core(_)));
}

fn meanflow(args: &[&str], root: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_meanflow")).args(args).env("MEANFLOW_OUTPUT_ROOT", root).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let good = root.path().join("good.json");
    let mut v = stokes(1.0);
    v["output"] = json!({"directory": "stokes"});
    fs::write(&good, v.to_string()).unwrap();
    let out = meanflow(&["run", good.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = root.path().join("stokes");
    assert!(run_dir.join("report.json").is_file());

    let out = meanflow(&["verify", run_dir.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");

    let info = meanflow(&["checkpoint-info", run_dir.join(checkpoint_name(1.0)).to_str().unwrap()], root.path());
    assert_eq!(info.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&info.stdout).contains("step 100"));

    let bad = root.path().join("bad.json");
    v["time"]["dt"] = json!(0.0);
    fs::write(&bad, v.to_string()).unwrap();
    let out = meanflow(&["run", bad.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time.dt"));

    let empty = root.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = meanflow(&["verify", empty.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL no reports found"));

    let blow = root.path().join("blow.json");
    v["time"]["dt"] = json!(0.01);
    v["forcing"]["field"] = json!({"kind": "shear", "wavenumber": 1, "amplitude": 1e300});
    fs::write(&blow, v.to_string()).unwrap();
    let out = meanflow(&["run", blow.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(3));
}
