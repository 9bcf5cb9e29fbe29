use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qprob_ffi::*;

const ORDER: &str = include_str!("../../core/scenarios/order.json");

fn last_error() -> String {
    unsafe { CStr::from_ptr(qp_last_error_message()) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> (QpStatus, *mut QpScenario) {
    let json = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    let status = unsafe { qp_scenario_parse(json.as_ptr(), &mut s) };
    (status, s)
}

#[test]
fn run_report_round_trip() {
    let (status, s) = parse(ORDER);
    assert_eq!(status, QpStatus::Ok);
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(qp_scenario_run(s, &mut r), QpStatus::Ok);
        assert_eq!(qp_report_len(r), 8);
        assert!(qp_report_all_passed(r));
        let mut v = 0.0;
        let mut zero = true;
        assert_eq!(qp_report_value(r, 1, &mut v, &mut zero), QpStatus::Ok);
        assert!((v - 0.25).abs() < 1e-12);
        assert!(!zero);
        let label = qp_report_label(r, 1);
        assert_eq!(CStr::from_ptr(label).to_str().unwrap(), "F then E");
        qp_string_free(label);
        assert!(qp_report_label(r, 99).is_null());
        assert_eq!(qp_report_value(r, 99, &mut v, ptr::null_mut()), QpStatus::NotFound);
        let json = qp_report_to_json(r);
        assert_eq!(CStr::from_ptr(json).to_str().unwrap().lines().count(), 8);
        qp_string_free(json);
        qp_report_free(r);
        qp_scenario_free(s);
    }
}

#[test]
fn hbar_override_changes_precession() {
    let (_, s) = parse(ORDER);
    let mut r = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(qp_scenario_set_hbar(s, 2.0), QpStatus::Ok);
        assert_eq!(qp_scenario_set_hbar(s, -1.0), QpStatus::InvariantViolation);
        qp_scenario_run(s, &mut r);
        qp_report_value(r, 3, &mut v, ptr::null_mut());
        qp_report_free(r);
        qp_scenario_free(s);
    }
    assert!((v - 0.5f64.cos().powi(2)).abs() < 1e-12);
}

#[test]
fn parse_errors_map_to_status_codes() {
    let (status, s) = parse(r#"{"dim": 2, "queries": ["#);
    assert_eq!(status, QpStatus::Syntax);
    assert!(s.is_null());
    assert!(last_error().contains("SyntaxError"));

    let (status, _) = parse(r#"{"dim": 2, "defs": {"E": {"event": {"matrix": [[1, 1], [0, 0]]}}}, "queries": []}"#);
    assert_eq!(status, QpStatus::InvariantViolation);
    assert!(last_error().contains("defs.E"));

    let (status, _) = parse(r#"{"dim": 2, "queries": [{"kind": "prob_event", "event": "E", "state": [1, 0]}]}"#);
    assert_eq!(status, QpStatus::UnknownName);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { qp_scenario_parse(ptr::null(), &mut out) }, QpStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { qp_scenario_parse(bad.as_ptr().cast(), &mut out) }, QpStatus::InvalidUtf8);
}

#[test]
fn consecutive_on_raw_buffers() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let f = [0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0];
    let events: Vec<f64> = f.iter().chain(&e).copied().collect();
    let psi = [h, 0.0, 0.0, h];
    let mut p = 0.0;
    assert_eq!(unsafe { qp_consecutive_pure(2, events.as_ptr(), 2, psi.as_ptr(), &mut p) }, QpStatus::Ok);
    // |⟨+|ψ⟩|² · |⟨0|+⟩|² for ψ = (1, i)/√2.
    let want = 0.5 * 0.5;
    assert!((p - want).abs() < 1e-12, "{p} vs {want}");

    let not_projection = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let status = unsafe { qp_consecutive_pure(2, not_projection.as_ptr(), 1, psi.as_ptr(), &mut p) };
    assert_eq!(status, QpStatus::InvariantViolation);
    let unnormalised = [1.0, 0.0, 1.0, 0.0];
    let status = unsafe { qp_consecutive_pure(2, e.as_ptr(), 1, unnormalised.as_ptr(), &mut p) };
    assert_eq!(status, QpStatus::InvariantViolation);
    assert_eq!(unsafe { qp_consecutive_pure(2, e.as_ptr(), 1, psi.as_ptr(), ptr::null_mut()) }, QpStatus::NullPointer);
}

#[test]
fn sampling_is_deterministic() {
    let (_, s) = parse(ORDER);
    let label = CString::new("sampled F then E").unwrap();
    let missing = CString::new("missing").unwrap();
    let (mut a, mut b, mut exact) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(qp_sample(s, label.as_ptr(), 2000, 7, &mut a, &mut exact), QpStatus::Ok);
        assert_eq!(qp_sample(s, label.as_ptr(), 2000, 7, &mut b, ptr::null_mut()), QpStatus::Ok);
        assert_eq!(qp_sample(s, missing.as_ptr(), 0, -1, &mut b, ptr::null_mut()), QpStatus::NotFound);
        qp_scenario_free(s);
    }
    assert_eq!(a, 495.0 / 2000.0);
    assert_eq!(a.to_bits(), (495.0f64 / 2000.0).to_bits());
    assert!((exact - 0.25).abs() < 1e-12);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qprob.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["qp_scenario_parse", "qp_report_value", "qp_consecutive_pure", "qp_sample", "QP_STATUS_DIM_MISMATCH = 6"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).status() {
        Ok(status) => assert!(status.success()),
        Err(_) => eprintln!("{cc} not available; skipped compiling the header"),
    }
}
