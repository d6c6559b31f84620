use std::path::Path;
use std::process::{Command, Output};

const HOMOGENEOUS: &str = r#"{"d": 1, "sigma": 0.3, "p0": -3.2, "rho": {"kind": "constant", "value": 1}}"#;

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_stratwave"))
        .args(args)
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("STRATWAVE_OUT")
        .output()
        .unwrap()
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], "{\"d\": 1,", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["check"], &HOMOGENEOUS.replace("}}", "}, \"bogus\": 1}"), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_stratwave")).args(["check", "/nonexistent/x.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shallow_flux_fails_the_conditions() {
    // |p0| = 1 is a very slow current: gravity dominates and the depth
    // condition fails.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], &HOMOGENEOUS.replace("-3.2", "-1"), dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("RES3"));
}

#[test]
fn default_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], HOMOGENEOUS, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["res2"]["holds"], true);
    assert_eq!(v["failed"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("out/check.json").exists());
}

#[test]
fn dispersion_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["dispersion"], HOMOGENEOUS, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["analytic_rel_gap"].as_f64().unwrap() < 1e-6);
    let theta = std::fs::read_to_string(dir.path().join("out/dispersion_theta.csv")).unwrap();
    assert!(theta.starts_with("lambda,theta,theta_over_lambda2\n"));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(&["laminar"], HOMOGENEOUS, d.path()).status.code(), Some(0));
    }
    for f in ["laminar.csv", "laminar.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn small_branch_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"d": 1, "sigma": 10, "p0": -5, "rho": {"kind": "linear", "rho0": 1, "slope": -0.05},
                  "branch": {"steps": 3, "snapshot_every": 2}}"#;
    let o = run(&["branch", "--nq", "16", "--np", "32"], cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["branch"]["nq"], 16);
    assert_eq!(v["shape_ok"], true);
    let csv = std::fs::read_to_string(dir.path().join("out/branch.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(dir.path().join("out/snapshot_plus_002.csv").exists());
}
