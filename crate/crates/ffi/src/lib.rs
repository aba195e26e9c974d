//! C ABI for `theory-arena`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns an
//! [`ArenaStatus`]; on failure a description is available from
//! [`arena_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are NUL-terminated UTF-8 and must be released
//! with [`arena_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use theory_arena::config::FileConfig;
use theory_arena::debate::{run_adjudication, DebateTrace};
use theory_arena::models::ModelKind;
use theory_arena::stimulus::{enumerate_designs, validate_design, ExperimentDesign};
use theory_arena::ArenaError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArenaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Schema = 4,
    InvalidBudget = 5,
    InvalidType = 6,
    InvalidSpace = 7,
    TheoryMismatch = 8,
    ParameterOutOfBounds = 9,
    InvalidLapse = 10,
    DegenerateParticles = 11,
    DesignMismatch = 12,
    UnknownTheory = 13,
    EmptyPool = 14,
    InvalidDesign = 15,
    AgentUnavailable = 16,
    Io = 17,
    Panic = 18,
}

impl From<&ArenaError> for ArenaStatus {
    fn from(e: &ArenaError) -> Self {
        match e {
            ArenaError::InvalidBudget => ArenaStatus::InvalidBudget,
            ArenaError::InvalidType(_) => ArenaStatus::InvalidType,
            ArenaError::InvalidSpace(_) => ArenaStatus::InvalidSpace,
            ArenaError::TheoryMismatch { .. } => ArenaStatus::TheoryMismatch,
            ArenaError::ParameterOutOfBounds { .. } => ArenaStatus::ParameterOutOfBounds,
            ArenaError::InvalidLapse(_) => ArenaStatus::InvalidLapse,
            ArenaError::DegenerateParticles(_) => ArenaStatus::DegenerateParticles,
            ArenaError::DesignMismatch { .. } => ArenaStatus::DesignMismatch,
            ArenaError::UnknownTheory(_) => ArenaStatus::UnknownTheory,
            ArenaError::EmptyPool => ArenaStatus::EmptyPool,
            ArenaError::InvalidDesign { .. } => ArenaStatus::InvalidDesign,
            ArenaError::AgentUnavailable { .. } => ArenaStatus::AgentUnavailable,
            ArenaError::Config { .. } => ArenaStatus::Config,
            ArenaError::Schema(_) => ArenaStatus::Schema,
            ArenaError::Io(_) => ArenaStatus::Io,
        }
    }
}

/// Run configuration handle.
pub struct ArenaConfig {
    inner: FileConfig,
}

/// Result of one adjudication run.
pub struct ArenaTrace {
    inner: DebateTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(ArenaStatus, String);

impl From<ArenaError> for Failure {
    fn from(e: ArenaError) -> Self {
        Failure(ArenaStatus::from(&e), format!("{}: {e}", e.code()))
    }
}

fn null(what: &str) -> Failure {
    Failure(ArenaStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ArenaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArenaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ArenaStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ArenaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `out` is null or valid for writes.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(ArenaStatus::InvalidUtf8, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string(v).map_err(|e| Failure(ArenaStatus::Io, e.to_string()))
}

/// Library version as a static string; never free it.
#[no_mangle]
pub extern "C" fn arena_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn arena_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default configuration: all three theories, fiducial GCM truth, ε = 0.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_config_default(out: *mut *mut ArenaConfig) -> ArenaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(ArenaConfig {
            inner: FileConfig::default(),
        }));
        Ok(())
    })
}

/// Parses a TOML configuration document and validates it.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_config_from_toml(toml: *const c_char, out: *mut *mut ArenaConfig) -> ArenaStatus {
    guard(|| {
        let text = read_str(toml, "toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = FileConfig::from_toml_str(text)?;
        inner.run_config()?;
        *out = Box::into_raw(Box::new(ArenaConfig { inner }));
        Ok(())
    })
}

/// Replaces the ground truth (`"GCM"`, `"RULEX"` or `"SUSTAIN"`) and its lapse rate.
///
/// # Safety
/// `config` must come from this library; `theory` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn arena_config_set_truth(
    config: *mut ArenaConfig,
    theory: *const c_char,
    epsilon: f64,
) -> ArenaStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        let kind: ModelKind = read_str(theory, "theory")?.parse()?;
        let mut next = cfg.inner.clone();
        next.truth.theory = kind;
        next.truth.epsilon = epsilon;
        next.run_config()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn arena_config_set_seed(config: *mut ArenaConfig, seed: u64) -> ArenaStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.inner.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn arena_config_free(config: *mut ArenaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one adjudication.
///
/// # Safety
/// `config` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_run(config: *const ArenaConfig, out: *mut *mut ArenaTrace) -> ArenaStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = run_adjudication(&cfg.inner.run_config()?)?;
        *out = Box::into_raw(Box::new(ArenaTrace { inner: trace }));
        Ok(())
    })
}

/// Winning theory name; free with [`arena_string_free`].
///
/// # Safety
/// `trace` must come from [`arena_run`] and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_winner(trace: *const ArenaTrace, out: *mut *mut c_char) -> ArenaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        write_string(out, t.inner.verdict.winner.clone())
    })
}

/// P(truth) minus the largest rival posterior.
///
/// # Safety
/// `trace` must come from [`arena_run`] and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_margin(trace: *const ArenaTrace, out: *mut f64) -> ArenaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = t.inner.verdict.margin;
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`arena_run`] and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_recovered(trace: *const ArenaTrace, out: *mut bool) -> ArenaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = t.inner.verdict.recovered;
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`arena_run`] and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_cycles(trace: *const ArenaTrace, out: *mut usize) -> ArenaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = t.inner.cycles_executed;
        Ok(())
    })
}

/// Full trace as JSON; free with [`arena_string_free`].
///
/// # Safety
/// `trace` must come from [`arena_run`] and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_to_json(trace: *const ArenaTrace, out: *mut *mut c_char) -> ArenaStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        write_string(out, to_json(&t.inner)?)
    })
}

/// # Safety
/// `trace` is null or came from [`arena_run`] and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn arena_trace_free(trace: *mut ArenaTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Checks a JSON design against the configuration's stimulus space (the
/// default space when `config` is null) and writes the validity report as
/// JSON, e.g. `{"valid":false,"violations":["CONFLICTING_LABEL"]}`. Malformed
/// JSON is reported as `ARENA_STATUS_SCHEMA`.
///
/// # Safety
/// `config` is null or from this library; `design_json` is a NUL-terminated
/// string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_validate_design(
    config: *const ArenaConfig,
    design_json: *const c_char,
    out: *mut *mut c_char,
) -> ArenaStatus {
    guard(|| {
        let space = config.as_ref().map(|c| c.inner.space.clone()).unwrap_or_default();
        let text = read_str(design_json, "design_json")?;
        let design: ExperimentDesign =
            serde_json::from_str(text).map_err(|e| Failure(ArenaStatus::Schema, format!("design: {e}")))?;
        write_string(out, to_json(&validate_design(&design, &space))?)
    })
}

/// First `budget` designs of the canonical enumeration, as a JSON array.
///
/// # Safety
/// `config` is null or from this library; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn arena_enumerate_designs(
    config: *const ArenaConfig,
    budget: usize,
    out: *mut *mut c_char,
) -> ArenaStatus {
    guard(|| {
        let space = config.as_ref().map(|c| c.inner.space.clone()).unwrap_or_default();
        write_string(out, to_json(&enumerate_designs(&space, budget)?)?)
    })
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arena_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
