use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resonant-verify"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

#[test]
fn jacobian_reports_the_ratio_for_each_radius() {
    let out = bin()
        .args(["verify-jacobian", "--samples", "1e6", "--seed", "7", "--suite", "ball-measure"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let value = report(&out);
    assert_eq!(value["suite"], "verify-jacobian");
    assert_eq!(value["pass"], true);
    assert_eq!(value["suites"][0]["suite"], "ball-measure");
    let checks = value["suites"][0]["checks"].as_array().unwrap();
    assert!(checks.len() >= 3);
    for c in checks {
        assert!(c["detail"].as_str().unwrap().contains("S/(16 pi^2 r^2)"));
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn missing_and_malformed_configs_exit_with_two() {
    let out = bin()
        .args(["verify-kinematics", "--config", "/nonexistent/run.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"mc": {"samples": 10}, "colour": "blue"}"#).unwrap();
    let out = bin().arg("verify-kinematics").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    std::fs::write(&path, "{ not json").unwrap();
    let out = bin().arg("verify-kinematics").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_invocations_exit_with_two() {
    for args in [
        &["frobnicate"][..],
        &["spectrum", "--samples", "many"],
        &["verify-bounds", "--suite", "nope"],
    ] {
        assert_eq!(bin().args(args).output().unwrap().status.code(), Some(2), "{args:?}");
    }
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn relative_configs_are_found_in_the_config_directory() {
    let out = bin()
        .env("RESONANT_CONFIG_DIR", configs())
        .current_dir(std::env::temp_dir())
        .args(["verify-kinematics", "--config", "quick.json", "--suite", "za-roundtrip"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["seed"], 7);
}

#[test]
fn out_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify-jacobian", "--samples", "20000", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let text = std::fs::read_to_string(dir.path().join("verify-jacobian.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["pass"].as_bool(), Some(out.status.code() == Some(0)));
    let csv = std::fs::read_to_string(dir.path().join("verify-jacobian-ball-measure.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,estimate,std_err,exact,ratio"));
    assert_eq!(lines.count(), 3);
    assert!(dir.path().join("verify-jacobian-pushforward.csv").exists());
}

#[test]
fn failing_checks_exit_with_one() {
    // The asymmetric energy factor breaks the exchange symmetry.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("asym.json");
    std::fs::write(
        &path,
        r#"{"cross_section": {"preset": "maxwell", "gamma": 0.0, "internal": {"kind": "asymmetric"}}, "mc": {"samples": 2000, "seed": 1}}"#,
    )
    .unwrap();
    let out = bin()
        .arg("verify-cross-section")
        .arg("--config")
        .arg(&path)
        .args(["--suite", "symmetry"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["pass"], false);
}
