//! C ABI over the `qprob` engine.
//!
//! Scenarios and reports cross the boundary as opaque handles. Every fallible
//! call returns a [`QpStatus`]; on failure the message is available from
//! [`qp_last_error_message`] on the same thread. Strings returned as
//! `char *` are owned by the caller and released with [`qp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qprob::born::{self, EventSequence, QState};
use qprob::hilbert::{Event, PureState};
use qprob::linalg::{CMatrix, CVector, C64};
use qprob::scenario::{self, ErrorKind, Report, Scenario, ScenarioError};
use qprob::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    UnknownName = 4,
    InvariantViolation = 5,
    DimMismatch = 6,
    Numerical = 7,
    NotFound = 8,
    Panic = 9,
    Other = 10,
}

/// Parsed scenario document.
pub struct QpScenario(Scenario);

/// Evaluated rows of a scenario.
pub struct QpReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior nul removed"));
}

fn fail(status: QpStatus, msg: impl Into<String>) -> QpStatus {
    set_error(msg);
    status
}

fn scenario_status(e: &ScenarioError) -> QpStatus {
    match e.kind {
        ErrorKind::Syntax => QpStatus::Syntax,
        ErrorKind::UnknownName => QpStatus::UnknownName,
        ErrorKind::InvariantViolation => QpStatus::InvariantViolation,
        ErrorKind::DimMismatch => QpStatus::DimMismatch,
        ErrorKind::Other => QpStatus::Other,
    }
}

fn engine_status(e: &Error) -> QpStatus {
    match e {
        Error::DimMismatch { .. } | Error::NonSquare { .. } => QpStatus::DimMismatch,
        Error::NoConvergence(_) => QpStatus::Numerical,
        Error::NotHermitian { .. }
        | Error::NotUnitary { .. }
        | Error::InvariantViolation(_)
        | Error::InvalidData(_) => QpStatus::InvariantViolation,
        _ => QpStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> QpStatus) -> QpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(QpStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, QpStatus> {
    if s.is_null() {
        return Err(fail(QpStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(QpStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread and must not be freed.
#[no_mangle]
pub extern "C" fn qp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a scenario document from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qp_scenario_parse(json: *const c_char, out: *mut *mut QpScenario) -> QpStatus {
    guard(|| {
        if out.is_null() {
            return fail(QpStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match scenario::parse_scenario(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(QpScenario(s)));
                QpStatus::Ok
            }
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// Overrides the reduced Planck constant of a parsed scenario.
///
/// # Safety
/// `s` must come from [`qp_scenario_parse`].
#[no_mangle]
pub unsafe extern "C" fn qp_scenario_set_hbar(s: *mut QpScenario, hbar: f64) -> QpStatus {
    let Some(s) = s.as_mut() else {
        return fail(QpStatus::NullPointer, "null scenario");
    };
    if !(hbar > 0.0 && hbar.is_finite()) {
        return fail(QpStatus::InvariantViolation, format!("hbar must be positive, got {hbar}"));
    }
    s.0.hbar = hbar;
    QpStatus::Ok
}

/// # Safety
/// `s` must come from [`qp_scenario_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_scenario_free(s: *mut QpScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Evaluates every query. Row failures are recorded in the report and do not
/// fail the call.
///
/// # Safety
/// `s` must come from [`qp_scenario_parse`] and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qp_scenario_run(s: *const QpScenario, out: *mut *mut QpReport) -> QpStatus {
    guard(|| {
        if out.is_null() {
            return fail(QpStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(s) = s.as_ref() else {
            return fail(QpStatus::NullPointer, "null scenario");
        };
        match scenario::run_queries(&s.0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(QpReport(r)));
                QpStatus::Ok
            }
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// Number of rows, or 0 for a null report.
///
/// # Safety
/// `r` must come from [`qp_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_report_len(r: *const QpReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.rows.len())
}

/// Whether every row evaluated without error.
///
/// # Safety
/// `r` must come from [`qp_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_report_all_passed(r: *const QpReport) -> bool {
    r.as_ref().is_some_and(|r| r.0.all_passed())
}

/// Value of row `index`. `zero_denominator` may be null.
///
/// # Safety
/// `r` must come from [`qp_scenario_run`]; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qp_report_value(
    r: *const QpReport,
    index: usize,
    value: *mut f64,
    zero_denominator: *mut bool,
) -> QpStatus {
    let (Some(r), false) = (r.as_ref(), value.is_null()) else {
        return fail(QpStatus::NullPointer, "null report or output pointer");
    };
    let Some(row) = r.0.rows.get(index) else {
        return fail(QpStatus::NotFound, format!("row {index} out of range"));
    };
    if let Some(z) = zero_denominator.as_mut() {
        *z = row.zero_denominator;
    }
    match (row.value, &row.error) {
        (Some(v), _) => {
            *value = v;
            QpStatus::Ok
        }
        (None, err) => fail(QpStatus::Other, err.clone().unwrap_or_else(|| "row has no value".into())),
    }
}

/// Label of row `index`, or null if out of range.
///
/// # Safety
/// `r` must come from [`qp_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_report_label(r: *const QpReport, index: usize) -> *mut c_char {
    match r.as_ref().and_then(|r| r.0.rows.get(index)) {
        Some(row) => into_c_string(row.label.clone()),
        None => ptr::null_mut(),
    }
}

/// Report as JSON lines, one object per row.
///
/// # Safety
/// `r` must come from [`qp_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_report_to_json(r: *const QpReport) -> *mut c_char {
    match r.as_ref() {
        Some(r) => into_c_string(r.0.to_json_lines()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `r` must come from [`qp_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qp_report_free(r: *mut QpReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn qp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn complex_slice(data: *const f64, len: usize) -> Vec<C64> {
    std::slice::from_raw_parts(data, 2 * len).chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// `‖E_n ⋯ E_1 ψ‖²` for `n_events` projectors of size `dim × dim`.
///
/// `events` holds the projectors back to back, each row-major with
/// interleaved real and imaginary parts (`2 · dim²` doubles per event).
/// `psi` holds `dim` interleaved complex entries and must have unit norm.
///
/// # Safety
/// Buffers must have the stated lengths; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qp_consecutive_pure(
    dim: usize,
    events: *const f64,
    n_events: usize,
    psi: *const f64,
    out: *mut f64,
) -> QpStatus {
    guard(|| {
        if out.is_null() || psi.is_null() || (events.is_null() && n_events > 0) {
            return fail(QpStatus::NullPointer, "null buffer");
        }
        if dim == 0 {
            return fail(QpStatus::DimMismatch, "dimension must be positive");
        }
        let result = (|| {
            let seq = (0..n_events)
                .map(|k| {
                    let entries = complex_slice(events.add(2 * k * dim * dim), dim * dim);
                    Event::try_new(CMatrix::from_row_major(dim, dim, &entries)?)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let state = PureState::new(CVector::new(complex_slice(psi, dim))?)?;
            born::consecutive(&EventSequence::new(seq)?, &QState::Pure(state))
        })();
        match result {
            Ok(p) => {
                *out = p.value;
                QpStatus::Ok
            }
            Err(e) => fail(engine_status(&e), e.to_string()),
        }
    })
}

/// Monte Carlo estimate for the sampling query `label`. A zero `trials` or
/// negative `seed` keeps the document's value.
///
/// # Safety
/// `s` must come from [`qp_scenario_parse`]; `label` must be a C string;
/// `frequency` must be valid and `analytic` valid or null.
#[no_mangle]
pub unsafe extern "C" fn qp_sample(
    s: *const QpScenario,
    label: *const c_char,
    trials: u64,
    seed: i64,
    frequency: *mut f64,
    analytic: *mut f64,
) -> QpStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), frequency.is_null()) else {
            return fail(QpStatus::NullPointer, "null scenario or output pointer");
        };
        let label = match read_str(label) {
            Ok(l) => l,
            Err(st) => return st,
        };
        let trials = (trials > 0).then_some(trials);
        let seed = u64::try_from(seed).ok();
        match scenario::sample_query(&s.0, label, trials, seed) {
            Ok(r) => {
                *frequency = r.frequency;
                if let Some(a) = analytic.as_mut() {
                    *a = r.analytic;
                }
                QpStatus::Ok
            }
            Err(e) if e.kind == ErrorKind::UnknownName => fail(QpStatus::NotFound, e.to_string()),
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}
