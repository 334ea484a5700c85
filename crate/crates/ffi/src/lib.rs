//! C ABI over the plapmem solver.
//!
//! Every entry point returns a status code; on failure the message is available through
//! `plapmem_last_error_message` on the same thread. Runs are owned by an opaque handle
//! that must be released with `plapmem_run_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plapmem::assembly::{flux, FluxParams};
use plapmem::config::{parse_config_str, RunConfig};
use plapmem::experiments::{final_errors, run_config};
use plapmem::stepper::RunOutput;
use plapmem::Error;

pub const PLAPMEM_OK: i32 = 0;
/// Invalid configuration or parameter.
pub const PLAPMEM_ERR_CONFIG: i32 = 2;
/// The fixed-point iteration did not converge.
pub const PLAPMEM_ERR_DIVERGED: i32 = 3;
/// Singular or ill-posed linear system, or non-finite input data.
pub const PLAPMEM_ERR_SOLVE: i32 = 4;
pub const PLAPMEM_ERR_IO: i32 = 5;
/// Null pointer, invalid UTF-8 or an index out of range.
pub const PLAPMEM_ERR_ARGUMENT: i32 = 6;
/// The caller's buffer is shorter than the data to copy.
pub const PLAPMEM_ERR_BUFFER_TOO_SMALL: i32 = 7;
/// A Rust panic was caught at the boundary.
pub const PLAPMEM_ERR_PANIC: i32 = 8;

/// A finished solver run.
pub struct PlapmemRun {
    config: RunConfig,
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.exit_code(), e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PLAPMEM_OK,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PLAPMEM_ERR_PANIC
        }
    }
}

fn argument(msg: &str) -> Failure {
    Failure(PLAPMEM_ERR_ARGUMENT, msg.into())
}

unsafe fn run_ref<'a>(run: *const PlapmemRun) -> Result<&'a PlapmemRun, Failure> {
    run.as_ref().ok_or_else(|| argument("run handle is null"))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(argument("output buffer is null"));
    }
    if len < src.len() {
        return Err(Failure(
            PLAPMEM_ERR_BUFFER_TOO_SMALL,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn plapmem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null if none. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn plapmem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Regularised flux `(ξ² + ε²)^{(p−2)/2} ξ`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn plapmem_flux(xi: f64, p: f64, epsilon: f64, out: *mut f64) -> i32 {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| argument("out is null"))?;
        let params = FluxParams::new(p, epsilon)?;
        *out = flux(xi, &params);
        Ok(())
    })
}

/// Parses a JSON configuration, runs it to `T` and stores a new handle in `*out`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_from_config_json(
    config_json: *const c_char,
    out: *mut *mut PlapmemRun,
) -> i32 {
    guard(|| {
        if config_json.is_null() || out.is_null() {
            return Err(argument("config_json and out must be non-null"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|_| argument("config_json is not valid UTF-8"))?;
        let config = parse_config_str(text)?;
        let output = run_config(&config)?;
        *out = Box::into_raw(Box::new(PlapmemRun { config, output }));
        Ok(())
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must come from `plapmem_run_from_config_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_free(run: *mut PlapmemRun) {
    if !run.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(run))));
    }
}

/// Number of time steps `N`; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_num_steps(run: *const PlapmemRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.steps())
}

/// Number of interior degrees of freedom; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_num_dofs(run: *const PlapmemRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.mesh.n_interior())
}

/// Copies the `N + 1` time levels.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_times(run: *const PlapmemRun, buf: *mut f64, len: usize) -> i32 {
    guard(|| copy_out(&run_ref(run)?.output.times, buf, len))
}

/// Copies the interior node coordinates.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_nodes(run: *const PlapmemRun, buf: *mut f64, len: usize) -> i32 {
    guard(|| copy_out(run_ref(run)?.output.mesh.interior_nodes(), buf, len))
}

/// Copies `b(t_k) = ‖U_h(t_k)‖²` for `k = 0..=N`.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_energy(run: *const PlapmemRun, buf: *mut f64, len: usize) -> i32 {
    guard(|| copy_out(&run_ref(run)?.output.energy, buf, len))
}

unsafe fn copy_level(
    levels: impl FnOnce(&PlapmemRun) -> &[Vec<f64>],
    run: *const PlapmemRun,
    step: usize,
    buf: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let levels = levels(run_ref(run)?);
        let level = levels
            .get(step)
            .ok_or_else(|| argument(&format!("step {step} out of range 0..={}", levels.len() - 1)))?;
        copy_out(level, buf, len)
    })
}

/// Copies the coefficients of `u_h` at step `step`.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_solution(
    run: *const PlapmemRun,
    step: usize,
    buf: *mut f64,
    len: usize,
) -> i32 {
    copy_level(|r| &r.output.u, run, step, buf, len)
}

/// Copies the coefficients of the memory term `y_h` at step `step`.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_memory(
    run: *const PlapmemRun,
    step: usize,
    buf: *mut f64,
    len: usize,
) -> i32 {
    copy_level(|r| &r.output.y, run, step, buf, len)
}

/// `L²` errors of `u_h` and `y_h` at `T`; fails with `PLAPMEM_ERR_CONFIG` when the problem
/// has no exact solution.
///
/// # Safety
/// `run` must be a live handle; `err_u` and `err_y` writable for one double each.
#[no_mangle]
pub unsafe extern "C" fn plapmem_run_l2_errors(
    run: *const PlapmemRun,
    err_u: *mut f64,
    err_y: *mut f64,
) -> i32 {
    guard(|| {
        let run = run_ref(run)?;
        if err_u.is_null() || err_y.is_null() {
            return Err(argument("err_u and err_y must be non-null"));
        }
        let (eu, ey) = final_errors(&run.config, &run.output)?;
        *err_u = eu;
        *err_y = ey;
        Ok(())
    })
}
