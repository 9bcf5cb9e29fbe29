use qprob::scenario::{self, ErrorKind, Scenario};

const ORDER: &str = include_str!("../scenarios/order.json");

fn value(s: &Scenario, label: &str) -> f64 {
    let report = scenario::run_queries(s).unwrap();
    report.row(label).unwrap_or_else(|| panic!("no row {label}")).value.unwrap()
}

#[test]
fn order_scenario_values() {
    let s = scenario::parse_scenario(ORDER).unwrap();
    assert!((value(&s, "E then F") - 0.5).abs() < 1e-12);
    assert!((value(&s, "F then E") - 0.25).abs() < 1e-12);
    assert!((value(&s, "F then E, no state") - 0.5).abs() < 1e-12);
    assert!((value(&s, "F after precession") - 1f64.cos().powi(2)).abs() < 1e-12);
    assert!((value(&s, "mean Sx") - 0.5).abs() < 1e-12);
    assert!((value(&s, "variance Sz") - 0.25).abs() < 1e-12);
    assert!((value(&s, "entropy Sz") - 1.0).abs() < 1e-12);
}

#[test]
fn shipped_scenarios_round_trip() {
    for text in [ORDER, scenario::EPR_SCENARIO, scenario::DEVICE_SCENARIO] {
        let s = scenario::parse_scenario(text).unwrap();
        let again = scenario::parse_scenario(&s.to_json_string()).unwrap();
        assert_eq!(s.to_json(), again.to_json());
        let a = scenario::run_queries(&s).unwrap().to_json_lines();
        let b = scenario::run_queries(&again).unwrap().to_json_lines();
        assert_eq!(a, b);
    }
}

#[test]
fn hbar_rescales_time() {
    let mut s = scenario::parse_scenario(ORDER).unwrap();
    s.hbar = 2.0;
    assert!((value(&s, "F after precession") - 0.5f64.cos().powi(2)).abs() < 1e-12);
}

#[test]
fn minimal_document() {
    let s = scenario::parse_scenario(r#"{"dim": 1, "queries": [{"kind": "prob_event", "event": {"ctor": "identity"}, "state": [1]}]}"#)
        .unwrap();
    let report = scenario::run_queries(&s).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].value, Some(1.0));
    assert_eq!(report.rows[0].label, "prob_event#0");
}

#[test]
fn document_errors_carry_kind_and_location() {
    let cases = [
        (r#"{"dim": 2, "queries": ["#, ErrorKind::Syntax, ""),
        (r#"{"dim": 2, "queries": [{"kind": "prob_event", "event": "E", "state": [1, 0]}]}"#, ErrorKind::UnknownName, "queries[0].event"),
        (
            r#"{"dim": 2, "defs": {"E": {"event": {"matrix": [[1, 1], [0, 0]]}}}, "queries": []}"#,
            ErrorKind::InvariantViolation,
            "defs.E",
        ),
        (
            r#"{"dim": 2, "defs": {"E": {"projector": [1, 0, 0]}}, "queries": [{"kind": "prob_event", "event": "E", "state": [1, 0]}]}"#,
            ErrorKind::DimMismatch,
            "",
        ),
        (r#"{"dim": 2, "queries": [], "extra": 1}"#, ErrorKind::Syntax, "extra"),
    ];
    for (text, kind, path) in cases {
        let err = scenario::parse_scenario(text).and_then(|s| scenario::run_queries(&s).map(|_| ())).unwrap_err();
        assert_eq!(err.kind, kind, "{text}: {err}");
        assert!(err.path.contains(path), "{text}: {err}");
    }
}

#[test]
fn failing_rows_do_not_stop_the_run() {
    let s = scenario::parse_scenario(
        r#"{"dim": 2, "defs": {"E": {"projector": [1, 0]}}, "queries": [
            {"label": "zero", "kind": "conditional", "target": ["E"], "given": [{"complement": "E"}, "E"], "state": [1, 0]},
            {"label": "fine", "kind": "prob_event", "event": "E", "state": [1, 0]}]}"#,
    )
    .unwrap();
    let report = scenario::run_queries(&s).unwrap();
    assert!(report.row("zero").unwrap().zero_denominator);
    assert_eq!(report.row("zero").unwrap().value, Some(0.0));
    assert_eq!(report.row("fine").unwrap().value, Some(1.0));
}

#[test]
fn sampling_is_reproducible() {
    let s = scenario::parse_scenario(ORDER).unwrap();
    let a = scenario::sample_query(&s, "sampled F then E", Some(2000), Some(7)).unwrap();
    let b = scenario::sample_query(&s, "sampled F then E", Some(2000), Some(7)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.successes, 495);
    assert_eq!(a.step_attempts, vec![2000, 1028]);
    let c = scenario::sample_query(&s, "sampled F then E", Some(2000), Some(8)).unwrap();
    assert_ne!(a.successes, c.successes);
}
