//! C interface to the adr-split solver.
//!
//! Configurations and grids are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`AdrStatus`]; on failure the message is kept per thread and can be
//! read with [`adr_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adr_split::config::{load_config, RunConfig};
use adr_split::driver;
use adr_split::geom::Point;
use adr_split::io::save_csv;
use adr_split::transfer::SolutionGrid;
use adr_split::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdrStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad configuration or argument.
    Validation = 2,
    /// The solve failed numerically.
    Numerical = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// A buffer was too small or a point lay outside the grid.
    OutOfRange = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// Opaque run configuration.
pub struct AdrConfig(RunConfig);

/// Opaque solution grid.
pub struct AdrGrid(SolutionGrid);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> AdrStatus {
    match e {
        e if e.is_validation() => AdrStatus::Validation,
        Error::Io(_) => AdrStatus::Io,
        Error::OutOfBox { .. } => AdrStatus::OutOfRange,
        _ => AdrStatus::Numerical,
    }
}

// Runs `f` behind a panic guard and records the message of any failure.
fn guard(f: impl FnOnce() -> Result<(), (AdrStatus, String)>) -> AdrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AdrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AdrStatus::Panic
        }
    }
}

fn lift(e: Error) -> (AdrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (AdrStatus, String) {
    (AdrStatus::NullPointer, "null pointer argument".into())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, (AdrStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, (AdrStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AdrStatus::Validation, "string is not valid UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (AdrStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn adr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a config file, or a shipped config by name.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_config_load(path: *const c_char, out: *mut *mut AdrConfig) -> AdrStatus {
    guard(|| {
        let path = c_str(path)?;
        let config = load_config(Path::new(path)).map_err(lift)?;
        put(out, AdrConfig(config))
    })
}

/// Parses config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_config_from_string(text: *const c_char, out: *mut *mut AdrConfig) -> AdrStatus {
    guard(|| {
        let config = RunConfig::parse(c_str(text)?).map_err(lift)?;
        put(out, AdrConfig(config))
    })
}

/// Sets the worker count used by later solves.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn adr_config_set_workers(config: *mut AdrConfig, workers: usize) -> AdrStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(null)?;
        if workers == 0 {
            return Err((AdrStatus::Validation, "workers must be at least 1".into()));
        }
        config.0.workers = workers;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adr_config_free(config: *mut AdrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the splitting method and returns the final grid.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_solve(config: *const AdrConfig, out: *mut *mut AdrGrid) -> AdrStatus {
    guard(|| {
        let config = borrow(config)?;
        let run = driver::solve(&config.0, |_| Ok(())).map_err(lift)?;
        put(out, AdrGrid(run.grid))
    })
}

/// Runs the 2D reference solver.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_reference(config: *const AdrConfig, out: *mut *mut AdrGrid) -> AdrStatus {
    guard(|| {
        let config = borrow(config)?;
        let grid = driver::with_workers(config.0.workers, || driver::reference(&config.0)).map_err(lift)?;
        put(out, AdrGrid(grid))
    })
}

/// Runs both solvers and reports the relative errors. `passed` is set to 1
/// when both are within the configured tolerances.
///
/// # Safety
/// `config` must come from this library; the output pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn adr_compare(
    config: *const AdrConfig,
    linf: *mut f64,
    l1: *mut f64,
    passed: *mut i32,
) -> AdrStatus {
    guard(|| {
        let config = borrow(config)?;
        if linf.is_null() || l1.is_null() || passed.is_null() {
            return Err(null());
        }
        let c = driver::compare_run(&config.0).map_err(lift)?;
        *linf = c.errors.linf;
        *l1 = c.errors.l1;
        *passed = i32::from(c.passed);
        Ok(())
    })
}

/// Node counts of the grid.
///
/// # Safety
/// `grid` must come from this library; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_grid_dims(grid: *const AdrGrid, nx: *mut usize, ny: *mut usize) -> AdrStatus {
    guard(|| {
        let grid = borrow(grid)?;
        if nx.is_null() || ny.is_null() {
            return Err(null());
        }
        *nx = grid.0.geometry.nx();
        *ny = grid.0.geometry.ny();
        Ok(())
    })
}

/// Copies the nodal values, row-major with x fastest, into `buf`.
///
/// # Safety
/// `grid` must come from this library; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adr_grid_values(grid: *const AdrGrid, buf: *mut f64, len: usize) -> AdrStatus {
    guard(|| {
        let grid = borrow(grid)?;
        if buf.is_null() {
            return Err(null());
        }
        let values = &grid.0.values;
        if len < values.len() {
            return Err((
                AdrStatus::OutOfRange,
                format!("buffer holds {len} values, grid has {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Bilinear value at `(x, y)`.
///
/// # Safety
/// `grid` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adr_grid_sample(grid: *const AdrGrid, x: f64, y: f64, out: *mut f64) -> AdrStatus {
    guard(|| {
        let grid = borrow(grid)?;
        if out.is_null() {
            return Err(null());
        }
        *out = grid.0.sample_bilinear(Point::new(x, y)).map_err(lift)?;
        Ok(())
    })
}

/// Writes the grid as `x,y,u` CSV.
///
/// # Safety
/// `grid` must come from this library; `path` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn adr_grid_write_csv(grid: *const AdrGrid, path: *const c_char) -> AdrStatus {
    guard(|| {
        let grid = borrow(grid)?;
        save_csv(&grid.0, Path::new(c_str(path)?)).map_err(lift)
    })
}

/// # Safety
/// `grid` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adr_grid_free(grid: *mut AdrGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
