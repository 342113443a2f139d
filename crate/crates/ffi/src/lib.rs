//! C ABI over `cluster-limit`.
//!
//! Every entry point returns a [`ClStatus`]; on anything but `CL_STATUS_OK`
//! the thread-local message from `cl_last_error_message` says what went wrong.
//! Handles are opaque and must be released with their matching `*_free`.
//! Strings handed out by the library are released with `cl_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cluster_limit::cli::{self, ExperimentConfig};
use cluster_limit::limits::CanonicalMeasure;
use cluster_limit::measure::TestFunction;
use cluster_limit::models::SequenceModel;
use cluster_limit::verify::ConvergenceReport;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidArgument = 4,
    /// The quantity is undefined for this input, e.g. no known extremal index.
    NotAvailable = 5,
    BufferTooSmall = 6,
    Config = 7,
    Runtime = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

type Res<T> = Result<T, (ClStatus, String)>;

fn fail<T>(status: ClStatus, msg: impl ToString) -> Res<T> {
    Err((status, msg.to_string()))
}

/// Runs `body`, records any error or panic, and maps it to a status.
fn guard(body: impl FnOnce() -> Res<()>) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            ClStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            ClStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Res<&'a str> {
    if p.is_null() {
        return fail(ClStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(p).to_str().or_else(|e| fail(ClStatus::InvalidUtf8, e))
}

unsafe fn out<'a, T>(p: *mut T) -> Res<&'a mut T> {
    p.as_mut().ok_or((ClStatus::NullPointer, "null output pointer".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Res<&'a T> {
    p.as_ref().ok_or((ClStatus::NullPointer, "null handle".into()))
}

fn to_c_string(s: String) -> Res<*mut c_char> {
    CString::new(s).map(CString::into_raw).or_else(|e| fail(ClStatus::Runtime, e))
}

fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> Res<T> {
    serde_json::from_str(s).or_else(|e| fail(ClStatus::InvalidJson, e))
}

fn arg<E: std::fmt::Display>(e: E) -> (ClStatus, String) {
    (ClStatus::InvalidArgument, e.to_string())
}

/// Opaque sequence model.
pub struct ClModel(SequenceModel);

/// Opaque canonical cluster measure.
pub struct ClCanonical(CanonicalMeasure);

/// Opaque convergence report.
pub struct ClReport(ConvergenceReport);

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a model from JSON such as
/// `{"kind":"moving_max","m":2,"alpha":1.0}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_model_from_json(json: *const c_char, model: *mut *mut ClModel) -> ClStatus {
    guard(|| {
        let slot = out(model)?;
        let m: SequenceModel = from_json(text(json)?)?;
        m.validate().map_err(arg)?;
        *slot = Box::into_raw(Box::new(ClModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `cl_model_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn cl_model_free(model: *mut ClModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Marginal tail probabilities `P(|ξ| > x)`, `P(ξ > x)` and `P(ξ < -x)`.
/// Any of the output pointers may be null.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_model_tail(
    model: *const ClModel,
    x: f64,
    modulus: *mut f64,
    upper: *mut f64,
    lower: *mut f64,
) -> ClStatus {
    guard(|| {
        let t = handle(model)?.0.tail(x).map_err(arg)?;
        for (p, v) in [(modulus, t.modulus), (upper, t.upper), (lower, t.lower)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Exceedance level `u_n` with `n P(ξ > u_n) = 1`.
///
/// # Safety
/// `model` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_model_level_u(model: *const ClModel, n: usize, value: *mut f64) -> ClStatus {
    guard(|| {
        *out(value)? = handle(model)?.0.level_u(n).map_err(arg)?;
        Ok(())
    })
}

/// Scaling `a_n` with `n P(|ξ| > a_n) = 1`.
///
/// # Safety
/// `model` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_model_scale_a(model: *const ClModel, n: usize, value: *mut f64) -> ClStatus {
    guard(|| {
        *out(value)? = handle(model)?.0.scale_a(n).map_err(arg)?;
        Ok(())
    })
}

/// Extremal index in closed form; `CL_STATUS_NOT_AVAILABLE` when there is none.
///
/// # Safety
/// `model` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_model_known_theta(model: *const ClModel, value: *mut f64) -> ClStatus {
    guard(|| {
        let slot = out(value)?;
        match handle(model)?.0.known_theta() {
            Some(t) => {
                *slot = t;
                Ok(())
            }
            None => fail(ClStatus::NotAvailable, "no closed-form extremal index for this model"),
        }
    })
}

/// Simulates `n` values into `buf`, which must hold at least `n` doubles.
///
/// # Safety
/// `model` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cl_model_sample_path(
    model: *const ClModel,
    n: usize,
    seed: u64,
    buf: *mut f64,
    len: usize,
) -> ClStatus {
    guard(|| {
        let m = handle(model)?;
        if buf.is_null() {
            return fail(ClStatus::NullPointer, "null buffer");
        }
        if len < n {
            return fail(ClStatus::BufferTooSmall, format!("buffer holds {len} values, need {n}"));
        }
        let path = m.0.sample_path(n, seed).map_err(arg)?;
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&path);
        Ok(())
    })
}

/// Parses and validates a canonical measure from JSON such as
/// `{"variant":"compound_poisson_uniform","a":0.5,"pi":[0,1]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `canonical` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_from_json(json: *const c_char, canonical: *mut *mut ClCanonical) -> ClStatus {
    guard(|| {
        let slot = out(canonical)?;
        let c: CanonicalMeasure = from_json(text(json)?)?;
        c.validate().map_err(arg)?;
        *slot = Box::into_raw(Box::new(ClCanonical(c)));
        Ok(())
    })
}

/// # Safety
/// `canonical` must come from `cl_canonical_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_free(canonical: *mut ClCanonical) {
    if !canonical.is_null() {
        drop(Box::from_raw(canonical));
    }
}

/// Intensity of clusters reaching modulus above `x`.
///
/// # Safety
/// `canonical` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_tail_mass(canonical: *const ClCanonical, x: f64, value: *mut f64) -> ClStatus {
    guard(|| {
        *out(value)? = handle(canonical)?.0.tail_mass(x).map_err(arg)?;
        Ok(())
    })
}

/// Probability that the limit has no point with modulus above `x`.
///
/// # Safety
/// `canonical` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_void_probability(
    canonical: *const ClCanonical,
    x: f64,
    value: *mut f64,
) -> ClStatus {
    guard(|| {
        *out(value)? = handle(canonical)?.0.void_probability(x).map_err(arg)?;
        Ok(())
    })
}

/// Laplace functional at a test function given as
/// `{"knots":[...],"values":[...]}`. `half_width` may be null; it is zero
/// when the value is exact.
///
/// # Safety
/// `canonical` must be a live handle, `f_json` NUL-terminated, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_laplace(
    canonical: *const ClCanonical,
    f_json: *const c_char,
    value: *mut f64,
    half_width: *mut f64,
) -> ClStatus {
    guard(|| {
        let c = handle(canonical)?;
        let f: TestFunction = from_json(text(f_json)?)?;
        let slot = out(value)?;
        let l = c.0.laplace(&f).map_err(arg)?;
        *slot = l.value;
        if let Some(h) = half_width.as_mut() {
            *h = l.half_width;
        }
        Ok(())
    })
}

/// Draws the limit restricted to modulus above `eps` and returns it as JSON.
/// Free the result with `cl_string_free`.
///
/// # Safety
/// `canonical` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_canonical_sample_json(
    canonical: *const ClCanonical,
    eps: f64,
    seed: u64,
    json: *mut *mut c_char,
) -> ClStatus {
    guard(|| {
        let c = handle(canonical)?;
        let slot = out(json)?;
        let mu = c.0.sample_seeded(eps, seed).map_err(arg)?;
        *slot = to_c_string(mu.to_json())?;
        Ok(())
    })
}

fn parse_config(toml: &str) -> Res<ExperimentConfig> {
    let cfg = ExperimentConfig::from_toml(toml).map_err(|e| (ClStatus::Config, e.to_string()))?;
    cfg.validate().map_err(|e| (ClStatus::Config, e.to_string()))?;
    Ok(cfg)
}

/// Runs an experiment config (TOML text) and writes its outputs under
/// `out_dir`, like the command-line tool. `exit_code` receives 0 when every
/// check passed and 1 otherwise.
///
/// # Safety
/// `toml` and `out_dir` must be NUL-terminated and `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_run_config(toml: *const c_char, out_dir: *const c_char, exit_code: *mut i32) -> ClStatus {
    guard(|| {
        let cfg = parse_config(text(toml)?)?;
        let dir = text(out_dir)?;
        let slot = out(exit_code)?;
        let o = cli::run(&cfg, Path::new(dir)).map_err(|e| match e.exit_code() {
            cli::EXIT_CONFIG => (ClStatus::Config, e.to_string()),
            _ => (ClStatus::Runtime, e.to_string()),
        })?;
        *slot = o.exit_code;
        Ok(())
    })
}

/// Evaluates a `verify` config in memory without writing files.
///
/// # Safety
/// `toml` must be NUL-terminated and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_verify_config(toml: *const c_char, report: *mut *mut ClReport) -> ClStatus {
    guard(|| {
        let cfg = parse_config(text(toml)?)?;
        let slot = out(report)?;
        let r = cli::verify_report(&cfg).map_err(|e| match e.exit_code() {
            cli::EXIT_CONFIG => (ClStatus::Config, e.to_string()),
            _ => (ClStatus::Runtime, e.to_string()),
        })?;
        *slot = Box::into_raw(Box::new(ClReport(r)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from `cl_verify_config` or be null.
#[no_mangle]
pub unsafe extern "C" fn cl_report_free(report: *mut ClReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Overall verdict and row count. Either output may be null.
///
/// # Safety
/// `report` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_report_summary(report: *const ClReport, pass: *mut bool, rows: *mut usize) -> ClStatus {
    guard(|| {
        let r = handle(report)?;
        if let Some(p) = pass.as_mut() {
            *p = r.0.pass;
        }
        if let Some(n) = rows.as_mut() {
            *n = r.0.rows.len();
        }
        Ok(())
    })
}

/// The full report as JSON. Free the result with `cl_string_free`.
///
/// # Safety
/// `report` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_report_to_json(report: *const ClReport, json: *mut *mut c_char) -> ClStatus {
    guard(|| {
        let r = handle(report)?;
        *out(json)? = to_c_string(r.0.to_json())?;
        Ok(())
    })
}
