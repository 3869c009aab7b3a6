//! C ABI for the qns toolkit.
//!
//! Every fallible function returns a [`QnsStatus`]; on failure the message is
//! available from [`qns_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles released by their `_free` function, and
//! structured results as JSON strings released by [`qns_string_free`].

use qns::counterexample::{avoiding_set, certify_not_qns, certify_restricted_qns, default_sequences, CounterexampleDomain, RestrictedGrid};
use qns::error::Error;
use qns::geometry;
use qns::quadrature::{Method, QuadratureSpec};
use qns::radius_sets::{GapLaw, RadiusSet, RadiusSetDoc};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QnsStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    Construction = 3,
    SequenceConstraint = 4,
    NotContained = 5,
    Internal = 6,
    Panic = 7,
}

/// A radius set parsed from JSON.
pub struct QnsRadiusSet(RadiusSet);

/// The gap counterexample domain with default sequences.
pub struct QnsCounterexample {
    domain: CounterexampleDomain,
    n0: usize,
}

struct Failure(QnsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Json(_) => QnsStatus::ParseError,
            Error::Construction(_) => QnsStatus::Construction,
            Error::SequenceConstraint { .. } => QnsStatus::SequenceConstraint,
            Error::NotContained { .. } => QnsStatus::NotContained,
            Error::Internal(_) | Error::Csv(_) | Error::Io(_) => QnsStatus::Internal,
            _ => QnsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(QnsStatus::ParseError, e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(QnsStatus::InvalidArgument, msg.to_string())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("no interior nul"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            QnsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            QnsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(invalid("null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("null output pointer"));
    }
    out.write(value);
    Ok(())
}

fn json_string(v: &impl serde::Serialize) -> Result<*mut c_char, Failure> {
    let text = serde_json::to_string(v)?;
    Ok(CString::new(text).map_err(|_| Failure(QnsStatus::Internal, "nul byte in JSON".into()))?.into_raw())
}

/// The message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next qns call on this thread.
#[no_mangle]
pub extern "C" fn qns_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `m₂(B(0,1) ∩ B((−1,0),1))/π`.
#[no_mangle]
pub extern "C" fn qns_lens_constant() -> f64 {
    geometry::lens_constant()
}

/// Area of the intersection of disks with radii `r1`, `r2` whose centers are
/// `d` apart.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_lens_area(r1: f64, r2: f64, d: f64, out: *mut f64) -> QnsStatus {
    guard(|| write_out(out, geometry::lens_area(r1, r2, d)?))
}

/// Parses a radius set from its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_radius_set_from_json(json: *const c_char, out: *mut *mut QnsRadiusSet) -> QnsStatus {
    guard(|| {
        let doc: RadiusSetDoc = serde_json::from_str(read_str(json)?)?;
        let set = doc.build()?;
        write_out(out, Box::into_raw(Box::new(QnsRadiusSet(set))))
    })
}

/// Writes 1 to `out` if `r` belongs to the set, 0 otherwise.
///
/// # Safety
/// `set` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_radius_set_contains(set: *const QnsRadiusSet, r: f64, out: *mut i32) -> QnsStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| invalid("null radius set"))?;
        write_out(out, i32::from(set.0.contains(r)))
    })
}

/// Classification report as JSON; release it with `qns_string_free`.
///
/// # Safety
/// `set` must be a live handle; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_radius_set_classify(set: *const QnsRadiusSet, out_json: *mut *mut c_char) -> QnsStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| invalid("null radius set"))?;
        let report = set.0.classify()?;
        write_out(out_json, json_string(&report)?)
    })
}

/// # Safety
/// `set` must be NULL or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qns_radius_set_free(set: *mut QnsRadiusSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Builds the counterexample with `count` balls and default sequences
/// `b_m = 16^(−m²)`, `a_m = b_m/(4·n0·m)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_counterexample_new(n0: u32, count: u32, out: *mut *mut QnsCounterexample) -> QnsStatus {
    guard(|| {
        let seq = default_sequences(n0 as usize, count as usize)?;
        let domain = CounterexampleDomain::build(&seq)?;
        write_out(out, Box::into_raw(Box::new(QnsCounterexample { domain, n0: n0 as usize })))
    })
}

/// The domain (sequences, centers, Ω and X) as JSON.
///
/// # Safety
/// `cx` must be a live handle; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_counterexample_domain_json(cx: *const QnsCounterexample, out_json: *mut *mut c_char) -> QnsStatus {
    guard(|| {
        let cx = cx.as_ref().ok_or_else(|| invalid("null counterexample"))?;
        write_out(out_json, json_string(&cx.domain.to_docs())?)
    })
}

/// Runs both certifications with closed-form means and writes
/// `{"not_qns": ..., "restricted": ...}`. `passed` receives 1 when both pass.
///
/// # Safety
/// `cx` must be a live handle; `out_json` and `passed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qns_counterexample_certify(
    cx: *const QnsCounterexample,
    seed: u64,
    workers: u32,
    out_json: *mut *mut c_char,
    passed: *mut i32,
) -> QnsStatus {
    guard(|| {
        let cx = cx.as_ref().ok_or_else(|| invalid("null counterexample"))?;
        if out_json.is_null() || passed.is_null() {
            return Err(invalid("null output pointer"));
        }
        let spec = QuadratureSpec { method: Method::Analytic, seed, workers: workers.max(1) as usize, ..QuadratureSpec::default() };
        let a = avoiding_set(&cx.domain, Some(GapLaw::counterexample(cx.n0)))?;
        let not_qns = certify_not_qns(&cx.domain, &spec)?;
        let restricted = certify_restricted_qns(&cx.domain, &a, &RestrictedGrid::default(), &spec)?;
        let ok = not_qns.verdict == restricted.verdict && restricted.verdict == qns::qns_engine::ReportVerdict::Pass;
        let json = json_string(&serde_json::json!({ "not_qns": not_qns, "restricted": restricted }))?;
        write_out(out_json, json)?;
        write_out(passed, i32::from(ok))
    })
}

/// # Safety
/// `cx` must be NULL or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qns_counterexample_free(cx: *mut QnsCounterexample) {
    if !cx.is_null() {
        drop(Box::from_raw(cx));
    }
}
