use std::fs;
use std::process::{Command, Output};

use ddmeas::table::SignalCsv;

fn ddmeas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddmeas"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn expand_prints_signed_terms() {
    let out = ddmeas(&["expand", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "−1·[U2 U1] +2·[U2 P+ U1] +2·[U2 P− U1]");
    assert!(text.contains("measured at {t_1: +}"));

    let one = stdout(&ddmeas(&["expand", "1"]));
    assert_eq!(one.lines().next().unwrap(), "+1·[U1]");

    let three = stdout(&ddmeas(&["expand", "3"]));
    let terms: Vec<&str> = three.lines().next().unwrap().split("] ").collect();
    assert_eq!(terms.len(), 9);
    assert_eq!(terms.iter().filter(|t| t.starts_with("−2")).count(), 4);
    assert_eq!(terms.iter().filter(|t| t.starts_with("+4")).count(), 4);
}

#[test]
fn expand_rejects_out_of_range() {
    for n in ["0", "7", "two"] {
        assert_eq!(ddmeas(&["expand", n]).status.code(), Some(2));
    }
}

#[test]
fn unknown_scope_is_a_usage_error() {
    let out = ddmeas(&["verify", "--scope", "eq9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scope"));
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = ddmeas(&["verify", "--scope", "eq3", "--seed", "7", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(!stderr.contains('\x1b'));
    assert!(stderr.contains("nonselective-average"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["scope"], "eq3");
    assert_eq!(report["seed"], 7);
    assert_eq!(report["summary"]["total"], 144);
    assert_eq!(report["summary"]["failed"], 0);
    assert!(report["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_csv_report() {
    let out = ddmeas(&["verify", "--scope", "pillar", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("check_id,parameters,max_abs_error,threshold,status\n"));
    assert_eq!(text.lines().count(), 1 + 24);
}

#[test]
fn qudit_scope_lists_composite_dimension_residuals() {
    let out = ddmeas(&["verify", "--scope", "qudit"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let listing: Vec<_> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["check_id"] == "qudit.residual-listing")
        .collect();
    assert_eq!(listing.len(), 30);
    assert!(listing.iter().all(|r| r["status"] == "info" && r["parameters"]["d"] == "6"));
}

const ECHO_CONFIG: &str = r#"{
    "model": {"kind": "pure_dephasing", "env_dim": 1, "seed": 0,
              "explicit": {"a_z": 0.5, "v_z": [[[1.0, 0.0]]]}},
    "schedule": {"times": [0.5, 1.0], "scale_grid": [0.5, 1.0, 2.0, 4.0]},
    "protocol": {"family": "dd", "pattern": "x"},
    "output": {"format": "csv"}
}"#;

#[test]
fn simulate_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("echo.json");
    fs::write(&config, ECHO_CONFIG).unwrap();
    let csv_path = dir.path().join("echo.csv");
    let out = ddmeas(&["simulate", "--config", config.to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = SignalCsv::parse(&fs::read_to_string(&csv_path).unwrap()).unwrap();
    assert_eq!(table.header(), ["t_1", "t_2", "pattern", "W"]);
    assert_eq!(table.rows().len(), 4);
    assert!(table.rows().iter().all(|r| (r.value - 1.0).abs() < 1e-10));

    let out = ddmeas(&["simulate", "--config", config.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, ECHO_CONFIG.replace(r#""pattern": "x""#, r#""pattern": "xx""#)).unwrap();
    let out = ddmeas(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocol.pattern"));

    let missing = dir.path().join("missing.json");
    assert_eq!(ddmeas(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&config, "{ not json").unwrap();
    assert_eq!(ddmeas(&["simulate", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}
