//! C interface to the quic3 model checker.
//!
//! Handles are opaque and owned by the caller: everything returned through an
//! out-pointer must be released with the matching `*_free` function. Calls
//! return a [`Quic3Error`] code; on failure a description is available from
//! [`quic3_last_error_message`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::time::Duration;

use quic3::engine::{Engine, Stats, Verdict};
use quic3::frontend::chc::chc_to_problem;
use quic3::frontend::config::{Backend, RunConfig};
use quic3::frontend::output::{emit_result, invariant_smt2, Format};
use quic3::frontend::SafetyProblem;
use quic3::qgen::QGenMode;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quic3Error {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Solver = 5,
    Engine = 6,
    Panic = 7,
}

/// Outcome of a run; the values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quic3Verdict {
    Safe = 0,
    Unsafe = 1,
    Unknown = 2,
}

/// Quantifier generalization mode.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quic3Qgen {
    Off = 0,
    Simple = 1,
    Arith = 2,
    Both = 3,
}

/// Run options. Obtain defaults from [`quic3_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct Quic3Options {
    pub max_depth: u32,
    pub qgen: Quic3Qgen,
    /// Per-query solver timeout in milliseconds.
    pub query_timeout_ms: u64,
    /// Overall budget in milliseconds; 0 means none.
    pub timeout_ms: u64,
    pub max_instances: u32,
    pub push_pobs: bool,
    /// Path of an SMT-LIB2 solver binary, or NULL to discover one.
    pub solver_path: *const c_char,
}

/// A parsed safety problem.
pub struct Quic3Problem {
    problem: SafetyProblem,
}

/// The verdict of a run together with its statistics.
pub struct Quic3Result {
    problem: SafetyProblem,
    verdict: Verdict,
    stats: Stats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (Quic3Error, String)>) -> Quic3Error {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Quic3Error::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            Quic3Error::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, (Quic3Error, String)> {
    if s.is_null() {
        return Err((Quic3Error::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|e| (Quic3Error::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn quic3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn quic3_options_default() -> Quic3Options {
    let d = RunConfig::default();
    Quic3Options {
        max_depth: d.max_depth as u32,
        qgen: Quic3Qgen::Off,
        query_timeout_ms: d.query_timeout.as_millis() as u64,
        timeout_ms: 0,
        max_instances: d.max_instances as u32,
        push_pobs: d.push_pobs,
        solver_path: ptr::null(),
    }
}

unsafe fn parse_with(
    src: *const c_char,
    out: *mut *mut Quic3Problem,
    parse: fn(&str) -> Result<SafetyProblem, String>,
) -> Quic3Error {
    guard(|| {
        if out.is_null() {
            return Err((Quic3Error::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let problem = parse(str_arg(src)?).map_err(|e| (Quic3Error::Parse, e))?;
        *out = Box::into_raw(Box::new(Quic3Problem { problem }));
        Ok(())
    })
}

/// Parse a problem in the native transition-system format.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn quic3_problem_parse(src: *const c_char, out: *mut *mut Quic3Problem) -> Quic3Error {
    parse_with(src, out, |s| SafetyProblem::parse(s).map_err(|e| e.to_string()))
}

/// Parse linear Horn clauses over a single predicate (SMT-LIB2).
///
/// # Safety
/// As [`quic3_problem_parse`].
#[no_mangle]
pub unsafe extern "C" fn quic3_problem_parse_chc(src: *const c_char, out: *mut *mut Quic3Problem) -> Quic3Error {
    parse_with(src, out, |s| chc_to_problem(s).map_err(|e| e.to_string()))
}

/// Number of state variables, or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_problem_num_vars(p: *const Quic3Problem) -> usize {
    p.as_ref().map_or(0, |p| p.problem.vars.len())
}

/// # Safety
/// `p` must be NULL or a handle from a parse call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn quic3_problem_free(p: *mut Quic3Problem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn run_config(o: &Quic3Options) -> Result<RunConfig, (Quic3Error, String)> {
    let backend = if o.solver_path.is_null() {
        Backend::External { path: None, flags: Vec::new() }
    } else {
        Backend::External { path: Some(PathBuf::from(str_arg(o.solver_path)?)), flags: Vec::new() }
    };
    let qgen = match o.qgen {
        Quic3Qgen::Off => QGenMode::Off,
        Quic3Qgen::Simple => QGenMode::Simple,
        Quic3Qgen::Arith => QGenMode::Arith,
        Quic3Qgen::Both => QGenMode::Both,
    };
    let cfg = RunConfig {
        max_depth: o.max_depth as usize,
        query_timeout: Duration::from_millis(o.query_timeout_ms),
        qgen,
        max_instances: o.max_instances as usize,
        push_pobs: o.push_pobs,
        backend,
    };
    cfg.validate().map_err(|e| (Quic3Error::Config, e.to_string()))?;
    Ok(cfg)
}

/// Check the problem. `opts` may be NULL for defaults.
///
/// # Safety
/// `p` must be a live problem handle, `opts` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn quic3_solve(p: *const Quic3Problem, opts: *const Quic3Options, out: *mut *mut Quic3Result) -> Quic3Error {
    guard(|| {
        if out.is_null() {
            return Err((Quic3Error::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let p = p.as_ref().ok_or((Quic3Error::NullArgument, "null problem".to_string()))?;
        let o = opts.as_ref().copied().unwrap_or_else(|| quic3_options_default());
        let cfg = run_config(&o)?;
        let mut solver = cfg.make_solver().map_err(|e| (Quic3Error::Solver, e.to_string()))?;
        let mut ecfg = cfg.engine_config();
        ecfg.timeout = (o.timeout_ms > 0).then(|| Duration::from_millis(o.timeout_ms));
        let outcome =
            Engine::new(&p.problem, ecfg, solver.as_mut()).run().map_err(|e| (Quic3Error::Engine, e.to_string()))?;
        *out = Box::into_raw(Box::new(Quic3Result {
            problem: p.problem.clone(),
            verdict: outcome.verdict,
            stats: outcome.stats,
        }));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_verdict(r: *const Quic3Result) -> Quic3Verdict {
    match r.as_ref().map(|r| &r.verdict) {
        Some(Verdict::Safe { .. }) => Quic3Verdict::Safe,
        Some(Verdict::Cex { .. }) => Quic3Verdict::Unsafe,
        _ => Quic3Verdict::Unknown,
    }
}

/// Number of frames explored.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_depth(r: *const Quic3Result) -> usize {
    r.as_ref().map_or(0, |r| r.stats.depth)
}

/// Total number of lemmas learned.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_lemmas(r: *const Quic3Result) -> usize {
    r.as_ref().map_or(0, |r| r.stats.lemmas)
}

/// Number of transitions of the counterexample, or -1 if there is none.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_cex_length(r: *const Quic3Result) -> i64 {
    match r.as_ref().map(|r| &r.verdict) {
        Some(Verdict::Cex { length, .. }) => *length as i64,
        _ => -1,
    }
}

/// The invariant as SMT-LIB2 declarations and assertions, or NULL when the
/// verdict is not safe. Free with [`quic3_string_free`].
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_invariant_smt2(r: *const Quic3Result) -> *mut c_char {
    match r.as_ref() {
        Some(Quic3Result { problem, verdict: Verdict::Safe { invariant, .. }, .. }) => {
            into_c_string(invariant_smt2(problem, invariant))
        }
        _ => ptr::null_mut(),
    }
}

/// The result as a JSON object. Free with [`quic3_string_free`].
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_json(r: *const Quic3Result) -> *mut c_char {
    r.as_ref().map_or(ptr::null_mut(), |r| into_c_string(emit_result(&r.problem, &r.verdict, &r.stats, Format::Json)))
}

/// # Safety
/// `r` must be NULL or a handle from [`quic3_solve`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn quic3_result_free(r: *mut Quic3Result) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn quic3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
