use std::path::{Path, PathBuf};
use std::process::Command;

use fwmav_cli::config::{self, RunConfig};
use fwmav_cli::output::CSV_COLUMNS;
use fwmav_cli::{run_from_args, EXIT_CONFIG, EXIT_FAILURE, EXIT_NONFINITE, EXIT_OK};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_from_args(std::iter::once("fwmav").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn hover_config_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("hover.csv");
    let cfg = configs().join("hover.toml");
    let (code, _, err) =
        invoke(&["simulate", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--duration", "0.2"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (header, rows) = read_rows(&csv);
    assert_eq!(header, CSV_COLUMNS);
    // 2000 steps recorded every 100th, plus the initial state
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r.len() == CSV_COLUMNS.len() && r.iter().all(|x| x.is_finite())));
    assert!(dir.path().join("hover.json").exists());
}

#[test]
fn conservative_summary_reports_small_energy_drift() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let cfg = configs().join("conservative.toml");
    let (code, _, err) = invoke(&["simulate", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert!(summary["energy_drift_rel"].as_f64().unwrap() <= 1e-6, "{summary}");
    assert_eq!(summary["steps"], 20000);
    for key in ["pi_z_drift_rel", "gamma_norm_err_max", "gamma_consistency_max", "wall_time_s"] {
        assert!(summary[key].is_number(), "missing {key}");
    }
}

#[test]
fn negative_mass_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config::default_config();
    cfg.params.left_wing.mass = -0.02;
    let path = write_config(dir.path(), &cfg);
    let (code, _, err) = invoke(&["simulate", "--config", &path]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("params.left_wing.mass"), "{err}");
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, config::DEFAULT_CONFIG.replacen("mass = 0.3", "mass = [0.3", 1)).unwrap();
    let (code, _, err) = invoke(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn diverging_run_exits_with_nonfinite() {
    // an enormous constant joint torque drives the rates past the finite range
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config::default_config();
    cfg.gait.amplitude = 1e300;
    cfg.gait.frequency = 1e-9;
    cfg.gait.phase = [1.0, 1.0];
    cfg.run.duration = 0.01;
    cfg.run.trajectory = dir.path().join("x.csv");
    let path = write_config(dir.path(), &cfg);
    let (code, _, err) = invoke(&["simulate", "--config", &path]);
    assert_eq!(code, EXIT_NONFINITE, "{err}");
}

#[test]
fn default_check_passes() {
    let (code, out, _) = invoke(&["check"]);
    assert_eq!(code, EXIT_OK, "{out}");
    for suite in fwmav_cli::suites::SUITES {
        assert!(out.lines().any(|l| l.starts_with(suite)), "suite {suite} missing:\n{out}");
    }
    assert!(!out.contains("FAIL"));
}

#[test]
fn zero_tolerance_forces_failure() {
    let (code, out, _) = invoke(&["check", "--tolerance", "0"]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(out.contains("FAIL"));
}

#[test]
fn only_runs_the_named_suite() {
    let (code, out, _) = invoke(&["check", "--only", "gradcheck", "--seed", "7"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|l| l.starts_with("gradcheck")));

    let (code, _, _) = invoke(&["check", "--only", "nonsense"]);
    assert_ne!(code, EXIT_OK);
}

#[test]
fn compare_oracle_default_horizon_passes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("errors.csv");
    let (code, out, err) = invoke(&["compare-oracle", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    let (header, rows) = read_rows(&csv);
    assert_eq!(header.len(), 9);
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().flat_map(|r| &r[1..]).all(|x| x.is_finite() && *x <= 1e-4));
}

#[test]
fn compare_oracle_zero_horizon_compares_one_sample() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("errors.csv");
    let (code, _, err) = invoke(&["compare-oracle", "--horizon", "0", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(read_rows(&csv).1.len(), 1);
}

#[cfg(feature = "sign-fault")]
#[test]
fn injected_sign_error_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("errors.csv");
    let (code, out, err) = invoke(&["compare-oracle", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILURE, "{out}");
    assert!(err.contains("worst component"), "{err}");
}

#[test]
fn config_roundtrip_is_identity() {
    for name in ["conservative.toml", "hover.toml"] {
        let cfg = RunConfig::load(&configs().join(name)).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg, "{name}");
    }
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_fwmav"))
        .args(["simulate", "--duration", "0.01", "--out", csv.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));

    let status = Command::new(env!("CARGO_BIN_EXE_fwmav"))
        .args(["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&status.stderr).contains("missing.toml"));
}
