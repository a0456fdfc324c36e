//! C ABI for `l1dev`.
//!
//! Conventions:
//!
//! - Every fallible function returns an [`L1devStatus`]; results are written
//!   through out-pointers only on `L1DEV_STATUS_OK`.
//! - The message of the most recent failure on the calling thread is
//!   available from [`l1dev_last_error`].
//! - Configs, reports and Helmert bases are opaque handles created by
//!   `*_new`/`*_parse`/`*_run` functions and released with the matching
//!   `*_free` function. Strings returned by the library are released with
//!   [`l1dev_string_free`].
//!
//! The header `include/l1dev.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use l1dev::asymptotic::{
    anticoncentration_threshold, expected_z_s, gaussian_lipschitz_tail, helmert_diagonalizer, sample_z_s_with,
    OrthogonalDiagonalizer,
};
use l1dev::bounds::{devroye_valid, BoundFamily, BoundSpec};
use l1dev::cli::{emit_plot_data, emit_report, parse_config, ExperimentConfig, Format, Report, Workers};
use l1dev::deviation;
use l1dev::distributions::{sample_dirichlet, sample_multinomial, SimplexVector, StreamKey};
use l1dev::montecarlo::{exact_tail_small, run_experiment, Estimator, Family, Outcome, Source};
use l1dev::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1devStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Domain = 3,
    Capacity = 4,
    Syntax = 5,
    Config = 6,
    Usage = 7,
    Io = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1devBoundFamily {
    WeissmanUnion = 0,
    WeissmanExact = 1,
    Devroye = 2,
    Agrawal = 3,
}

impl From<L1devBoundFamily> for BoundFamily {
    fn from(f: L1devBoundFamily) -> Self {
        match f {
            L1devBoundFamily::WeissmanUnion => BoundFamily::WeissmanUnion,
            L1devBoundFamily::WeissmanExact => BoundFamily::WeissmanExact,
            L1devBoundFamily::Devroye => BoundFamily::Devroye,
            L1devBoundFamily::Agrawal => BoundFamily::Agrawal,
        }
    }
}

/// Which deviation a Monte Carlo estimate samples.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1devSourceKind {
    /// `‖p̂ − p‖₁` with `p̂ = Multinomial(n, uniform)/n`.
    Multinomial = 0,
    /// `‖p̂ − p‖₁` with `p̂ ~ Dirichlet(n/S, …, n/S)`.
    Dirichlet = 1,
    /// The limit `Z_S` (`n` is ignored).
    Limit = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1devOutcome {
    Violated = 0,
    Consistent = 1,
    Inconclusive = 2,
}

impl From<Outcome> for L1devOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Violated => L1devOutcome::Violated,
            Outcome::Consistent => L1devOutcome::Consistent,
            Outcome::Inconclusive => L1devOutcome::Inconclusive,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1devFormat {
    Csv = 0,
    Json = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct L1devTailEstimate {
    pub threshold: f64,
    pub exceedance_count: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1devVerdict {
    pub epsilon: f64,
    /// Devroye regime flag; always true for the other families.
    pub bound_valid: bool,
    pub estimate: L1devTailEstimate,
    pub claimed_delta: f64,
    pub outcome: L1devOutcome,
}

/// Opaque Helmert basis of order S.
pub struct L1devHelmert(OrthogonalDiagonalizer);

/// Opaque parsed experiment config.
pub struct L1devConfig(ExperimentConfig);

/// Opaque experiment report.
pub struct L1devReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> L1devStatus {
    match err {
        Error::Validation(_) => L1devStatus::Validation,
        Error::Domain(_) => L1devStatus::Domain,
        Error::Capacity(_) => L1devStatus::Capacity,
        Error::Syntax { .. } => L1devStatus::Syntax,
        Error::Config(_) => L1devStatus::Config,
        Error::Usage(_) => L1devStatus::Usage,
        Error::Io(_) => L1devStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> L1devStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => L1devStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer: {name}"));
            L1devStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(name))) => {
            set_last_error(&format!("{name} is not valid UTF-8"));
            L1devStatus::InvalidUtf8
        }
        Err(_) => {
            set_last_error("internal panic");
            L1devStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(name))
    } else {
        Ok(())
    }
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(name))
}

fn into_c_string(bytes: Vec<u8>) -> Result<*mut c_char, Failure> {
    CString::new(bytes)
        .map(CString::into_raw)
        .map_err(|_| Failure::Lib(Error::Usage("output contains an interior NUL byte".into())))
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    non_null(out, name)?;
    out.write(value);
    Ok(())
}

fn workers_of(workers: u32) -> Option<usize> {
    if workers == 0 {
        None
    } else {
        Some(workers as usize)
    }
}

/// Message of the last failed call on this thread. Valid until the next call
/// that fails on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn l1dev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn l1dev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn l1dev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// ε(n, S, δ) for `family`. `out_valid` (may be NULL) receives the Devroye
/// regime flag.
///
/// # Safety
/// `out_epsilon` must be writable; `out_valid` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_bound_epsilon(
    family: L1devBoundFamily,
    n: u64,
    s: usize,
    delta: f64,
    out_epsilon: *mut f64,
    out_valid: *mut bool,
) -> L1devStatus {
    guard(|| {
        let eval = BoundSpec::new(family.into(), n, s, delta)?.evaluate()?;
        write(out_epsilon, eval.epsilon, "out_epsilon")?;
        if !out_valid.is_null() {
            out_valid.write(eval.valid);
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn l1dev_devroye_valid(s: usize, delta: f64) -> bool {
    devroye_valid(s, delta)
}

/// `‖phat − p‖₁`. Both inputs must be probability vectors of length `len`.
///
/// # Safety
/// `phat` and `p` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_l1_deviation(phat: *const f64, p: *const f64, len: usize, out: *mut f64) -> L1devStatus {
    guard(|| {
        let phat = SimplexVector::new(slice_arg(phat, len, "phat")?.to_vec())?;
        let p = SimplexVector::new(slice_arg(p, len, "p")?.to_vec())?;
        write(out, deviation::l1_deviation(&phat, &p)?, "out")
    })
}

/// `Z_n = (D/2)·‖phat − p‖₁`; `out_maximizer` (may be NULL) receives the
/// maximizing vertex of `[0, D]^len`.
///
/// # Safety
/// `phat` and `p` must point to `len` readable doubles; `out_z` must be
/// writable; `out_maximizer` must be NULL or point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn l1dev_z_n(
    phat: *const f64,
    p: *const f64,
    len: usize,
    d: f64,
    out_z: *mut f64,
    out_maximizer: *mut f64,
) -> L1devStatus {
    guard(|| {
        let phat = SimplexVector::new(slice_arg(phat, len, "phat")?.to_vec())?;
        let p = SimplexVector::new(slice_arg(p, len, "p")?.to_vec())?;
        let r = deviation::deviation(&phat, &p, d)?;
        write(out_z, r.z_n, "out_z")?;
        if !out_maximizer.is_null() {
            slice::from_raw_parts_mut(out_maximizer, len).copy_from_slice(&r.maximizer);
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_expected_z_s(s: usize, out: *mut f64) -> L1devStatus {
    guard(|| write(out, expected_z_s(s)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_anticoncentration_threshold(s: usize, delta: f64, out: *mut f64) -> L1devStatus {
    guard(|| write(out, anticoncentration_threshold(s, delta)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_gaussian_lipschitz_tail(t: f64, out: *mut f64) -> L1devStatus {
    guard(|| write(out, gaussian_lipschitz_tail(t)?, "out"))
}

/// Draws Multinomial(n, p) counts for stream `(seed, trial)`.
///
/// # Safety
/// `p` must point to `len` readable doubles and `out_counts` to `len` writable `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn l1dev_sample_multinomial(
    p: *const f64,
    len: usize,
    n: u64,
    seed: u64,
    trial: u64,
    out_counts: *mut u64,
) -> L1devStatus {
    guard(|| {
        let p = SimplexVector::new(slice_arg(p, len, "p")?.to_vec())?;
        non_null(out_counts, "out_counts")?;
        let c = sample_multinomial(&p, n, StreamKey::new(seed, trial));
        slice::from_raw_parts_mut(out_counts, len).copy_from_slice(c.counts());
        Ok(())
    })
}

/// Draws a Dirichlet(alpha) vector for stream `(seed, trial)`.
///
/// # Safety
/// `alpha` must point to `len` readable doubles and `out` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn l1dev_sample_dirichlet(
    alpha: *const f64,
    len: usize,
    seed: u64,
    trial: u64,
    out: *mut f64,
) -> L1devStatus {
    guard(|| {
        let alpha = slice_arg(alpha, len, "alpha")?;
        non_null(out, "out")?;
        let v = sample_dirichlet(alpha, StreamKey::new(seed, trial))?;
        slice::from_raw_parts_mut(out, len).copy_from_slice(v.entries());
        Ok(())
    })
}

/// Exact `P(‖c/n − p‖₁ ≥ threshold)` by enumeration.
///
/// # Safety
/// `p` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_exact_tail_small(
    p: *const f64,
    len: usize,
    n: u64,
    threshold: f64,
    out: *mut f64,
) -> L1devStatus {
    guard(|| {
        let p = SimplexVector::new(slice_arg(p, len, "p")?.to_vec())?;
        write(out, exact_tail_small(&p, n, threshold)?, "out")
    })
}

/// Monte Carlo `P(X ≥ threshold)` with a 95% Clopper–Pearson interval.
/// `workers = 0` uses all cores; results do not depend on it.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_estimate_tail(
    kind: L1devSourceKind,
    s: usize,
    n: u64,
    d: f64,
    threshold: f64,
    trials: u64,
    seed: u64,
    workers: u32,
    out: *mut L1devTailEstimate,
) -> L1devStatus {
    guard(|| {
        let source = match kind {
            L1devSourceKind::Multinomial => Source::finite(Family::Multinomial, SimplexVector::uniform(s)?, n)?,
            L1devSourceKind::Dirichlet => Source::finite(Family::Dirichlet, SimplexVector::uniform(s)?, n)?,
            L1devSourceKind::Limit => Source::limit(s, d)?,
        };
        let e = Estimator::new(workers_of(workers)).tail(&source, threshold, trials, seed)?;
        write(
            out,
            L1devTailEstimate {
                threshold: e.threshold,
                exceedance_count: e.exceedance_count,
                trials: e.trials,
                point: e.point,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                ci_level: e.ci_level,
            },
            "out",
        )
    })
}

/// Falsification verdict for a bound at uniform `p`, multinomial sampling.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_falsify(
    family: L1devBoundFamily,
    n: u64,
    s: usize,
    delta: f64,
    trials: u64,
    seed: u64,
    workers: u32,
    out: *mut L1devVerdict,
) -> L1devStatus {
    guard(|| {
        let spec = BoundSpec::new(family.into(), n, s, delta)?;
        let v = Estimator::new(workers_of(workers)).falsify(&spec, Family::Multinomial, trials, seed)?;
        let e = v.estimate;
        write(
            out,
            L1devVerdict {
                epsilon: v.bound.epsilon,
                bound_valid: v.bound.valid,
                estimate: L1devTailEstimate {
                    threshold: e.threshold,
                    exceedance_count: e.exceedance_count,
                    trials: e.trials,
                    point: e.point,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    ci_level: e.ci_level,
                },
                claimed_delta: v.claimed_delta,
                outcome: v.outcome.into(),
            },
            "out",
        )
    })
}

/// # Safety
/// `out` must be writable. The handle must be released with [`l1dev_helmert_free`].
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_new(s: usize, out: *mut *mut L1devHelmert) -> L1devStatus {
    guard(|| {
        let h = helmert_diagonalizer(s)?;
        write(out, Box::into_raw(Box::new(L1devHelmert(h))), "out")
    })
}

/// # Safety
/// `h` must be NULL or a live handle from [`l1dev_helmert_new`].
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_free(h: *mut L1devHelmert) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Order S of the basis, or 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_dim(h: *const L1devHelmert) -> usize {
    h.as_ref().map_or(0, |h| h.0.dim())
}

/// Dense S×S matrix, row-major.
///
/// # Safety
/// `h` must be a live handle; `out` must point to S·S writable doubles.
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_matrix(h: *const L1devHelmert, out: *mut f64) -> L1devStatus {
    guard(|| {
        let h = h.as_ref().ok_or(Failure::Null("h"))?;
        non_null(out, "out")?;
        let m = h.0.matrix();
        slice::from_raw_parts_mut(out, m.data.len()).copy_from_slice(&m.data);
        Ok(())
    })
}

/// `Uᵀw` in O(S).
///
/// # Safety
/// `h` must be a live handle; `w` and `out` must point to S doubles.
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_apply_transpose(
    h: *const L1devHelmert,
    w: *const f64,
    out: *mut f64,
) -> L1devStatus {
    guard(|| {
        let h = h.as_ref().ok_or(Failure::Null("h"))?;
        let s = h.0.dim();
        let w = slice_arg(w, s, "w")?;
        non_null(out, "out")?;
        slice::from_raw_parts_mut(out, s).copy_from_slice(&h.0.apply_transpose(w));
        Ok(())
    })
}

/// One draw of `Z_S` at scale `d` for stream `(seed, trial)`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_helmert_sample_z(
    h: *const L1devHelmert,
    d: f64,
    seed: u64,
    trial: u64,
    out: *mut f64,
) -> L1devStatus {
    guard(|| {
        let h = h.as_ref().ok_or(Failure::Null("h"))?;
        write(out, sample_z_s_with(&h.0, d, StreamKey::new(seed, trial))?.z, "out")
    })
}

/// Parses experiment config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable. Release
/// the handle with [`l1dev_config_free`].
#[no_mangle]
pub unsafe extern "C" fn l1dev_config_parse(text: *const c_char, out: *mut *mut L1devConfig) -> L1devStatus {
    guard(|| {
        let cfg = parse_config(str_arg(text, "text")?)?;
        write(out, Box::into_raw(Box::new(L1devConfig(cfg))), "out")
    })
}

/// Overrides the worker count; 0 means all cores.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_config_set_workers(cfg: *mut L1devConfig, workers: u32) -> L1devStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or(Failure::Null("cfg"))?;
        cfg.0.workers = match workers_of(workers) {
            None => Workers::Auto,
            Some(w) => Workers::Fixed(w),
        };
        Ok(())
    })
}

/// Number of tasks in the config, or 0 for NULL.
///
/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_config_task_count(cfg: *const L1devConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.0.tasks.len())
}

/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_config_free(cfg: *mut L1devConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs every task of `cfg`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable. Release the report
/// with [`l1dev_report_free`].
#[no_mangle]
pub unsafe extern "C" fn l1dev_experiment_run(cfg: *const L1devConfig, out: *mut *mut L1devReport) -> L1devStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or(Failure::Null("cfg"))?;
        let report = run_experiment(&cfg.0)?;
        write(out, Box::into_raw(Box::new(L1devReport(report))), "out")
    })
}

/// Loads a report previously emitted as JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_from_json(json: *const c_char, out: *mut *mut L1devReport) -> L1devStatus {
    guard(|| {
        let report = Report::from_json(str_arg(json, "json")?)?;
        write(out, Box::into_raw(Box::new(L1devReport(report))), "out")
    })
}

/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_free(report: *mut L1devReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_row_count(report: *const L1devReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.rows.len())
}

/// True when any falsify row is Violated.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_any_violated(report: *const L1devReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.any_violated())
}

/// Serializes the report. Release `*out` with [`l1dev_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_emit(
    report: *const L1devReport,
    format: L1devFormat,
    out: *mut *mut c_char,
) -> L1devStatus {
    guard(|| {
        let report = report.as_ref().ok_or(Failure::Null("report"))?;
        non_null(out, "out")?;
        let format = match format {
            L1devFormat::Csv => Format::Csv,
            L1devFormat::Json => Format::Json,
        };
        let s = into_c_string(emit_report(&report.0, format))?;
        out.write(s);
        Ok(())
    })
}

/// Plot data for one task. Release `*out` with [`l1dev_string_free`].
///
/// # Safety
/// `report` must be a live handle; `task_id` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn l1dev_report_plot_data(
    report: *const L1devReport,
    task_id: *const c_char,
    out: *mut *mut c_char,
) -> L1devStatus {
    guard(|| {
        let report = report.as_ref().ok_or(Failure::Null("report"))?;
        let task_id = str_arg(task_id, "task_id")?;
        non_null(out, "out")?;
        let s = into_c_string(emit_plot_data(&report.0, task_id)?)?;
        out.write(s);
        Ok(())
    })
}
