use std::fs;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_gamma-noise");

fn summary(dir: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).args(["paths", "--samples", "2", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["passed"], true);
    assert!(dir.path().join("paths/increments_000.csv").exists());
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = Command::new(BIN).arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let record: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["error"]["kind"], "usage");
}

#[test]
fn invalid_parameter_writes_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"verhulst": {"a": -1.0}}"#).unwrap();
    let out = Command::new(BIN).arg("verhulst").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let s = summary(dir.path());
    assert_eq!(s["passed"], false);
    assert_eq!(s["error"]["kind"], "invalid_config");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"lln": {"taus": 3}}"#).unwrap();
    let out = Command::new(BIN).arg("lln").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(dir.path())["error"]["kind"], "invalid_config");
}

#[test]
fn command_may_come_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "wick-selftest", "samples": 3}"#).unwrap();
    let out = Command::new(BIN).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(dir.path())["command"], "wick-selftest");
}
