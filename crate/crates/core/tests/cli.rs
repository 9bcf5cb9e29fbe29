use std::path::PathBuf;
use std::process::{Command, Output};

fn qprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprob")).args(args).output().expect("binary runs")
}

fn scenario_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn temp_file(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(format!("qprob-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn table_suite_prints_both_tables() {
    let out = qprob(&["check", "--suite", "paper"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("P(E1 | E0, E2)    conditional  1.000000000000"), "{text}");
    assert!(text.contains("P(dead | decayed)"), "{text}");
    assert!(text.ends_with("4 checks, 0 failed\n"));
}

#[test]
fn run_emits_one_json_line_per_query() {
    let out = qprob(&["run", &scenario_path("epr.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0]["label"], "P(E1 | E0, E2)");
    assert_eq!(rows[0]["value"], 1.0);
}

#[test]
fn invalid_event_exits_with_usage_code_and_path() {
    let file = temp_file(
        "bad.json",
        r#"{"dim": 2, "defs": {"E": {"event": {"matrix": [[1, 1], [0, 0]]}}}, "queries": []}"#,
    );
    let out = qprob(&["run", &file]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("defs.E"));
}

#[test]
fn failing_row_exits_with_failure_code() {
    let file = temp_file(
        "fail.json",
        r#"{"dim": 2, "queries": [{"kind": "entropy", "obs": {"ctor": "spin_z"}, "base": 1, "state": [1, 0]}]}"#,
    );
    let out = qprob(&["run", &file, "--format", "table"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn sampling_is_byte_identical_across_runs() {
    let path = scenario_path("order.json");
    let args = ["sample", &path, "--query", "sampled F then E", "--trials", "2000", "--seed", "7"];
    let a = qprob(&args);
    let b = qprob(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["successes"], 495);
}

#[test]
fn unknown_query_label_is_a_usage_error() {
    let out = qprob(&["sample", &scenario_path("order.json"), "--query", "missing"]);
    assert_eq!(out.status.code(), Some(2));
}
