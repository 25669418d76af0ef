//! C ABI for `rankloop`.
//!
//! Objects are opaque handles released with the matching `rl_*_free`. Every fallible call returns an
//! [`RlStatus`]; on failure a message is available from
//! [`rl_last_error_message`] on the same thread. Panics never cross the
//! boundary and are reported as `RL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rankloop::phase::{analyze_loop, AnalysisOptions};
use rankloop::{
    detect, parse_family, parse_loop, svd_point, Bbox, Classification, DetectOptions,
    DetectionResult, Error, GaugeMode, MatrixFamily, PhaseReport,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ContinuationFailed = 4,
    NearDegenerate = 5,
    /// The detector hit its cell budget. The result handle is still written.
    BudgetExceeded = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlGauge {
    Joint = 0,
    UMvd = 1,
    VMvd = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlClassification {
    NoRankLoss = 0,
    RankLossInside = 1,
    Inconclusive = 2,
}

/// Parametrized matrix family.
pub struct RlFamily(MatrixFamily);

/// Accrued phases around one loop.
pub struct RlPhaseReport(PhaseReport);

/// Output of a rank-loss search.
pub struct RlDetection(DetectionResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Parse { .. } => RlStatus::ParseError,
        Error::NearDegenerate { .. } => RlStatus::NearDegenerate,
        Error::StepTooLarge { .. }
        | Error::ContinuationFailed { .. }
        | Error::RefinementNeeded { .. } => RlStatus::ContinuationFailed,
        Error::Dimension(_) | Error::Domain(_) | Error::Contract(_) => RlStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> RlStatus {
    fail(status_of(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> RlStatus) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == RlStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(RlStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    if s.is_null() {
        return Err(fail(RlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        fail(
            RlStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn out_slice<'a>(buf: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], RlStatus> {
    if buf.is_null() {
        return Err(fail(RlStatus::NullPointer, "output buffer is null"));
    }
    if len < need {
        return Err(fail(
            RlStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {need}"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(buf, need))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            return fail(RlStatus::NullPointer, concat!($what, " is null"));
        }
    };
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a family from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_family_from_json(
    json: *const c_char,
    out: *mut *mut RlFamily,
) -> RlStatus {
    guard(|| {
        non_null!(out, "out");
        let text = try_status!(read_str(json, "json"));
        match parse_family(text) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(RlFamily(f)));
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `f` must be null or a handle from [`rl_family_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_family_free(f: *mut RlFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live family handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_family_dim(f: *const RlFamily, n: *mut usize) -> RlStatus {
    guard(|| {
        non_null!(f, "family");
        non_null!(n, "n");
        *n = (*f).0.n();
        RlStatus::Ok
    })
}

/// Writes A(x, y) row-major as interleaved (re, im) pairs: `2 n²` values.
///
/// # Safety
/// `f` must be a live family handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_family_eval(
    f: *const RlFamily,
    x: f64,
    y: f64,
    buf: *mut f64,
    len: usize,
) -> RlStatus {
    guard(|| {
        non_null!(f, "family");
        let f = &(*f).0;
        let n = f.n();
        let out = try_status!(out_slice(buf, len, 2 * n * n));
        let a = f.eval([x, y]);
        for i in 0..n {
            for j in 0..n {
                let z = a[(i, j)];
                out[2 * (i * n + j)] = z.re;
                out[2 * (i * n + j) + 1] = z.im;
            }
        }
        RlStatus::Ok
    })
}

/// Writes the `n` singular values of A(x, y) in descending order.
///
/// # Safety
/// `f` must be a live family handle and `sigma` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_singular_values(
    f: *const RlFamily,
    x: f64,
    y: f64,
    sigma: *mut f64,
    len: usize,
) -> RlStatus {
    guard(|| {
        non_null!(f, "family");
        let f = &(*f).0;
        let out = try_status!(out_slice(sigma, len, f.n()));
        match svd_point(&f.eval([x, y])) {
            Ok(t) => {
                out.copy_from_slice(&t.sigma);
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Continues the SVD around a loop given as JSON and reports accrued phases.
/// `gauge` is one of the [`RlGauge`] values.
///
/// # Safety
/// `f` must be a live family handle, `loop_json` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_loop_phases(
    f: *const RlFamily,
    loop_json: *const c_char,
    gauge: i32,
    out: *mut *mut RlPhaseReport,
) -> RlStatus {
    guard(|| {
        non_null!(f, "family");
        non_null!(out, "out");
        let text = try_status!(read_str(loop_json, "loop_json"));
        let l = match parse_loop(text) {
            Ok(l) => l,
            Err(e) => return from_error(e),
        };
        let g = match gauge {
            x if x == RlGauge::Joint as i32 => GaugeMode::Joint,
            x if x == RlGauge::UMvd as i32 => GaugeMode::Umvd,
            x if x == RlGauge::VMvd as i32 => GaugeMode::Vmvd,
            _ => return fail(RlStatus::InvalidArgument, format!("unknown gauge {gauge}")),
        };
        match analyze_loop(&(*f).0, &l, g, &AnalysisOptions::default()) {
            Ok(a) => {
                *out = Box::into_raw(Box::new(RlPhaseReport(a.report)));
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn rl_phase_report_free(r: *mut RlPhaseReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of phases, one per singular value.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn rl_phase_report_len(r: *const RlPhaseReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.beta.len())
}

/// Writes the accrued phases, each in (-pi, pi].
///
/// # Safety
/// `r` must be a live report handle and `beta` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_phase_report_beta(
    r: *const RlPhaseReport,
    beta: *mut f64,
    len: usize,
) -> RlStatus {
    guard(|| {
        non_null!(r, "report");
        let b = &(*r).0.beta;
        let out = try_status!(out_slice(beta, len, b.len()));
        out.copy_from_slice(b);
        RlStatus::Ok
    })
}

/// Phase sum reduced to (-pi, pi], or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn rl_phase_report_sum(r: *const RlPhaseReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.sum_mod_2pi)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn rl_phase_report_classification(
    r: *const RlPhaseReport,
) -> RlClassification {
    match r.as_ref().map(|r| r.0.classification) {
        Some(Classification::NoRankLoss) => RlClassification::NoRankLoss,
        Some(Classification::RankLossInside) => RlClassification::RankLossInside,
        _ => RlClassification::Inconclusive,
    }
}

/// Searches a box for rank-loss points with default options, overridden by
/// `max_cells` when it is nonzero. On `RL_STATUS_BUDGET_EXCEEDED` the partial
/// result is still written to `out`.
///
/// # Safety
/// `f` must be a live family handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_detect(
    f: *const RlFamily,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    max_cells: usize,
    out: *mut *mut RlDetection,
) -> RlStatus {
    guard(|| {
        non_null!(f, "family");
        non_null!(out, "out");
        let b = match Bbox::new(xmin, xmax, ymin, ymax) {
            Ok(b) => b,
            Err(e) => return from_error(e),
        };
        let mut opts = DetectOptions::default();
        if max_cells > 0 {
            opts.max_cells = max_cells;
        }
        match detect(&(*f).0, b, &opts) {
            Ok(r) => {
                let exhausted = r.budget_exhausted;
                *out = Box::into_raw(Box::new(RlDetection(r)));
                if exhausted {
                    fail(
                        RlStatus::BudgetExceeded,
                        format!("cell budget of {} exhausted", opts.max_cells),
                    )
                } else {
                    RlStatus::Ok
                }
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `d` must be null or a live detection handle.
#[no_mangle]
pub unsafe extern "C" fn rl_detection_free(d: *mut RlDetection) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be null or a live detection handle.
#[no_mangle]
pub unsafe extern "C" fn rl_detection_len(d: *const RlDetection) -> usize {
    d.as_ref().map_or(0, |d| d.0.points.len())
}

/// # Safety
/// `d` must be null or a live detection handle.
#[no_mangle]
pub unsafe extern "C" fn rl_detection_inconclusive_len(d: *const RlDetection) -> usize {
    d.as_ref().map_or(0, |d| d.0.inconclusive.len())
}

/// Location of point `index` and whether it passed the genericity test.
///
/// # Safety
/// `d` must be a live detection handle; `x`, `y` and `generic` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rl_detection_point(
    d: *const RlDetection,
    index: usize,
    x: *mut f64,
    y: *mut f64,
    generic: *mut bool,
) -> RlStatus {
    guard(|| {
        non_null!(d, "detection");
        non_null!(x, "x");
        non_null!(y, "y");
        non_null!(generic, "generic");
        let pts = &(*d).0.points;
        let Some(p) = pts.get(index) else {
            return fail(
                RlStatus::InvalidArgument,
                format!("index {index} out of range for {} points", pts.len()),
            );
        };
        *x = p.location[0];
        *y = p.location[1];
        *generic = p.genericity.regular;
        RlStatus::Ok
    })
}
