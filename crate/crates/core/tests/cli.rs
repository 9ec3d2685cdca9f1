use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exchange-net"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    exe().current_dir(dir).args(args).output().unwrap()
}

fn schema_validator() -> jsonschema::Validator {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_schema_valid(report: &Value) {
    let v = schema_validator();
    let errors: Vec<String> = v
        .iter_errors(report)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn report_json_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "name": "schema check",
        "seeds": 2,
        "metrics_at": [1e-2],
        "runs": [
            {"mode": "evolutionary", "rows": 8, "cols": 8},
            {"mode": "frozen", "rows": 8, "cols": 8, "freeze_at": 1e-1, "phase_two_data": "same"},
            {"mode": "automaton", "rows": 5, "cols": 5, "distribution": {"kind": "quadrant"}},
            {"mode": "frozen", "rows": 5, "cols": 5, "freeze_at": 1e-9, "max_rounds": 2}
        ]
    }"#;
    fs::write(dir.path().join("c.json"), config).unwrap();
    let out = run_in(dir.path(), &["--config", "c.json", "--out", "res"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/report.json")).unwrap()).unwrap();
    assert_schema_valid(&report);
    assert_eq!(report["outcome"], "partial");
    assert!(report["cells"][3]["error"].as_str().unwrap().contains("phase 1"));

    let mut broken = report.clone();
    broken["cells"][0]["members"][0]["stop_reason"] = "tired".into();
    assert!(!schema_validator().is_valid(&broken));
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"mode": "frozen", "rows": 8, "cols": 8}"#).unwrap();
    let out = run_in(dir.path(), &["--config", "c.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("freeze_at"));

    fs::write(
        dir.path().join("c.json"),
        r#"{"runs": [{"mode": "automaton", "rows": "x", "cols": 8}]}"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["--config", "c.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("runs[0].rows"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run_in(dir.path(), &["--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn all_cells_failing_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "--mode",
            "frozen",
            "--freeze-at",
            "1e-12",
            "--max-rounds",
            "3",
            "--rows",
            "6",
            "--cols",
            "6",
            "--format",
            "csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("out/frozen_uniform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"mode": "automaton", "seeds": 4, "runs": [{"rows": 20, "cols": 20}, {"rows": 30, "cols": 30}]}"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "--config",
            "c.json",
            "--rows",
            "6",
            "--cols",
            "7",
            "--seeds",
            "1",
            "--thresholds",
            "1e-1,1e-2",
            "--format",
            "csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/automaton_uniform.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "size,b<1e-1,b<1e-2");
    assert!(lines[1].starts_with("6x7,") && lines[2].starts_with("6x7,"), "{csv}");
}

#[test]
fn metrics_subcommand_reads_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"mode": "evolutionary", "rows": 10, "cols": 10, "metrics_at": [1e-3], "output": {"snapshots": true, "format": "csv"}}"#,
    )
    .unwrap();
    assert_eq!(run_in(dir.path(), &["--config", "c.json"]).status.code(), Some(0));
    let metrics = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let row: Vec<&str> = metrics.lines().nth(1).unwrap().split(',').collect();

    let out = run_in(
        dir.path(),
        &["metrics", "out/snapshots/cell0_m0_b1e-3.edges", "--format", "csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let again: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    // nodes, diameter, cpl, clustering, connectivity, method agree with the in-run measurement
    assert_eq!(&row[4..10], &again[..6]);

    let out = run_in(dir.path(), &["metrics", "nope.edges"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_subcommand_prints_torus_values() {
    let out = exe()
        .args(["oracle", "--rows", "100", "--cols", "100"])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        "diameter=50 cpl=33.338334"
    );
}

#[test]
fn help_exits_zero() {
    let out = exe().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--freeze-at"));
}

#[test]
fn subcommand_and_run_flags_conflict() {
    let out = exe()
        .args(["--rows", "5", "oracle", "--rows", "5", "--cols", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        exchange_net::cli::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}
