//! C interface to the `transonic` solver.
//!
//! Configurations and solutions are opaque handles owned by the caller and released with
//! the matching `*_free` function. Every fallible call returns a [`TsStatus`]; the message of
//! the last failure on the calling thread is available from [`ts_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde_json::Value;
use transonic::cli_io::{apply_override, parse_config_value, write_failure_report, write_solution, RunConfig};
use transonic::upstream::UpstreamSolution;
use transonic::{build_parallel_swirl_inflow, solve_transonic_shock, Error, Solution};

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    /// A null pointer, a non-UTF-8 string or a buffer of the wrong length.
    InvalidArgument = 1,
    /// The configuration is malformed or violates a constraint.
    Config = 2,
    /// The iteration left the small-perturbation regime or hit the sweep cap.
    Diverged = 3,
    /// Writing result files failed.
    Io = 4,
    /// Any other solver error.
    Solver = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Nodal fields of a solution, each stored row-major as `n_y × n_t` doubles.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsField {
    Ux = 0,
    Ur = 1,
    Utheta = 2,
    Rho = 3,
    P = 4,
    Entropy = 5,
    Lambda = 6,
    Phi = 7,
    Psi = 8,
}

/// Run configuration.
pub struct TsConfig {
    doc: Value,
    config: RunConfig,
}

/// Converged solution together with the inflow it was computed for.
pub struct TsSolution {
    upstream: UpstreamSolution,
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: TsStatus, message: impl AsRef<str>) -> TsStatus {
    set_error(message.as_ref());
    status
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::Config(_) | Error::Parse(_) => TsStatus::Config,
        Error::Io { .. } => TsStatus::Io,
        Error::Diverged { .. } | Error::AmplitudeTooLarge(_) => TsStatus::Diverged,
        _ => TsStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> TsStatus) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(TsStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, TsStatus> {
    if s.is_null() {
        return Err(fail(TsStatus::InvalidArgument, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(TsStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn build_config(doc: Value) -> Result<TsConfig, TsStatus> {
    match parse_config_value(&doc) {
        Ok(config) => Ok(TsConfig { doc, config }),
        Err(e) => Err(fail(status_of(&e), e.to_string())),
    }
}

/// Message of the last failed call on this thread. Valid until the next failing call on
/// the same thread; empty when nothing has failed.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration: reference background, no perturbation, 129×65 grid.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ts_config_default(out: *mut *mut TsConfig) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return fail(TsStatus::InvalidArgument, "out is null");
        }
        match build_config(Value::Object(Default::default())) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(c));
                TsStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Parses a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_from_json(json: *const c_char, out: *mut *mut TsConfig) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return fail(TsStatus::InvalidArgument, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let doc: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(TsStatus::Config, format!("malformed JSON: {e}")),
        };
        match build_config(doc) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(c));
                TsStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Applies a dotted `key=value` override. The configuration is left unchanged on failure.
///
/// # Safety
/// `config` must be a live handle and `assignment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ts_config_set(config: *mut TsConfig, assignment: *const c_char) -> TsStatus {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(TsStatus::InvalidArgument, "config is null");
        };
        let text = match str_arg(assignment, "assignment") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let mut doc = cfg.doc.clone();
        if let Err(e) = apply_override(&mut doc, text) {
            return fail(status_of(&e), e.to_string());
        }
        match build_config(doc) {
            Ok(c) => {
                *cfg = c;
                TsStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Canonical JSON of the configuration with all defaults filled. Release with
/// [`ts_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_config_to_json(config: *const TsConfig, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        let text = serde_json::to_string_pretty(&cfg.config).unwrap_or_default();
        *out = CString::new(text).unwrap_or_default().into_raw();
        TsStatus::Ok
    })
}

/// # Safety
/// `config` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ts_config_free(config: *mut TsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the inflow and runs the solver. On divergence `*out` is set to null and the
/// message names the failed smallness proxy.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_solve(config: *const TsConfig, out: *mut *mut TsSolution) -> TsStatus {
    guard(|| {
        let (Some(cfg), false) = (config.as_ref(), out.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        *out = ptr::null_mut();
        let c = &cfg.config;
        let result = build_parallel_swirl_inflow(&c.inflow, c.gas.gamma)
            .and_then(|up| solve_transonic_shock(&up, &c.solver).map(|s| (up, s)));
        match result {
            Ok((upstream, solution)) => {
                *out = Box::into_raw(Box::new(TsSolution { upstream, solution }));
                TsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Solves and writes the result files to `dir`, or a failure report when the run diverges.
///
/// # Safety
/// `config` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn ts_run(config: *const TsConfig, dir: *const c_char) -> TsStatus {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return fail(TsStatus::InvalidArgument, "config is null");
        };
        let dir = match str_arg(dir, "dir") {
            Ok(d) => Path::new(d),
            Err(s) => return s,
        };
        let c = &cfg.config;
        let result = build_parallel_swirl_inflow(&c.inflow, c.gas.gamma)
            .and_then(|up| solve_transonic_shock(&up, &c.solver).map(|s| (up, s)));
        match result {
            Ok((up, sol)) => match write_solution(&sol, &up, c, dir, 1) {
                Ok(_) => TsStatus::Ok,
                Err(e) => fail(TsStatus::Io, e.to_string()),
            },
            Err(e) => {
                let (proxy, report) = match &e {
                    Error::Diverged { proxy, report, .. } => (Some(*proxy), Some(report.as_ref())),
                    other => (other.proxy(), None),
                };
                if let Err(w) = write_failure_report(c, dir, 1, proxy, &e.to_string(), report) {
                    return fail(TsStatus::Io, w.to_string());
                }
                fail(status_of(&e), e.to_string())
            }
        }
    })
}

/// # Safety
/// `solution` must be null or a handle from [`ts_solve`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_free(solution: *mut TsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Grid dimensions.
///
/// # Safety
/// `solution` must be a live handle; `n_y` and `n_t` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_grid(solution: *const TsSolution, n_y: *mut usize, n_t: *mut usize) -> TsStatus {
    guard(|| {
        let (Some(s), false, false) = (solution.as_ref(), n_y.is_null(), n_t.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        *n_y = s.solution.grid.ny;
        *n_t = s.solution.grid.nt;
        TsStatus::Ok
    })
}

/// Copies the shock position `f(r_j)` at the `n_t` radial nodes into `out`.
///
/// # Safety
/// `solution` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_shock(solution: *const TsSolution, out: *mut f64, len: usize) -> TsStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        let f = s.solution.shock.values();
        if len != f.len() {
            return fail(TsStatus::InvalidArgument, format!("buffer holds {len} values, shock has {}", f.len()));
        }
        ptr::copy_nonoverlapping(f.as_ptr(), out, len);
        TsStatus::Ok
    })
}

/// Copies one nodal field, row-major over `(y, t)`, into `out`. `field` is a [`TsField`]
/// value.
///
/// # Safety
/// `solution` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_field(
    solution: *const TsSolution,
    field: c_int,
    out: *mut f64,
    len: usize,
) -> TsStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        let (p, f) = (&s.solution.primitive, &s.solution.fields);
        let a = match field {
            x if x == TsField::Ux as c_int => &p.u_x,
            x if x == TsField::Ur as c_int => &p.u_r,
            x if x == TsField::Utheta as c_int => &p.u_theta,
            x if x == TsField::Rho as c_int => &p.rho,
            x if x == TsField::P as c_int => &p.p,
            x if x == TsField::Entropy as c_int => &f.entropy,
            x if x == TsField::Lambda as c_int => &f.lambda,
            x if x == TsField::Phi as c_int => &f.phi,
            x if x == TsField::Psi as c_int => &f.psi,
            other => return fail(TsStatus::InvalidArgument, format!("unknown field {other}")),
        };
        if len != a.len() {
            return fail(TsStatus::InvalidArgument, format!("buffer holds {len} values, field has {}", a.len()));
        }
        for (k, v) in a.iter().enumerate() {
            *out.add(k) = *v;
        }
        TsStatus::Ok
    })
}

/// Iteration report and diagnostics as JSON. Release with [`ts_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_solution_report_json(solution: *const TsSolution, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(TsStatus::InvalidArgument, "null argument");
        };
        let doc = serde_json::json!({
            "sigma": s.upstream.sigma,
            "iteration": s.solution.report,
            "diagnostics": s.solution.diagnostics,
        });
        *out = CString::new(doc.to_string()).unwrap_or_default().into_raw();
        TsStatus::Ok
    })
}
