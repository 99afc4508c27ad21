//! C ABI for the slender-body DtN/NtD solver.
//!
//! Every entry point returns an [`SlpStatus`]; on failure the message is
//! available from [`slp_last_error_message`] on the same thread. Solver state
//! lives behind the opaque [`SlpSystem`] handle.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slenderlap::geometry::{CurveConfig, SurfaceSpec};
use slenderlap::grid::SurfaceGrid;
use slenderlap::operators::{Backend, OperatorContext};
use slenderlap::solver::SlenderSystem;
use slenderlap::spectral::GridFunction;
use slenderlap::Error;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Geometry = 4,
    IllConditioned = 5,
    Singular = 6,
    NoConvergence = 7,
    Dimension = 8,
    Io = 9,
    Panic = 10,
}

/// Backend selector for [`slp_system_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpBackend {
    Direct = 0,
    Split = 1,
}

/// Factorized slender-body system on one grid.
pub struct SlpSystem {
    inner: SlenderSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SlpStatus {
    match e {
        Error::Domain(_) | Error::Overflow { .. } | Error::UndefinedMode { .. } | Error::NonZeroMean(_) => SlpStatus::Domain,
        Error::Config(_) | Error::Json(_) => SlpStatus::InvalidArgument,
        Error::DegenerateCurve(_) | Error::SelfIntersection(_) | Error::Geometry(_) => SlpStatus::Geometry,
        Error::NoConvergence(_) => SlpStatus::NoConvergence,
        Error::IllConditioned(_) => SlpStatus::IllConditioned,
        Error::Singular => SlpStatus::Singular,
        Error::Dimension(_) => SlpStatus::Dimension,
        Error::Io(_) | Error::Csv(_) => SlpStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SlpStatus>) -> SlpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SlpStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SlpStatus::Panic
        }
    }
}

fn fail(e: Error) -> SlpStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> SlpStatus {
    set_error(format!("null pointer: {what}"));
    SlpStatus::NullPointer
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn slp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build and factorize the system for a curve, radius and grid.
///
/// `curve` is a preset name (`circle`, `perturbed_circle`) or a curve JSON
/// document; null selects the circle.
///
/// # Safety
/// `curve` must be null or a valid NUL-terminated string; `out` must be a
/// valid pointer. The handle must be released with [`slp_system_free`].
#[no_mangle]
pub unsafe extern "C" fn slp_system_new(
    curve: *const c_char,
    epsilon: f64,
    n_s: usize,
    n_theta: usize,
    backend: SlpBackend,
    out: *mut *mut SlpSystem,
) -> SlpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        slenderlap::solver::sequential_dense_algebra();
        let cfg = if curve.is_null() {
            CurveConfig::circle()
        } else {
            let text = CStr::from_ptr(curve).to_str().map_err(|_| fail(Error::Config("curve is not UTF-8".into())))?;
            match text.trim() {
                "circle" => CurveConfig::circle(),
                "perturbed_circle" | "perturbed-circle" => CurveConfig::perturbed_circle(0.05),
                json => serde_json::from_str(json).map_err(|e| fail(e.into()))?,
            }
        };
        let backend = match backend {
            SlpBackend::Direct => Backend::Direct,
            SlpBackend::Split => Backend::Split,
        };
        let spec = SurfaceSpec::from_config(&cfg, epsilon).map_err(fail)?;
        let grid = SurfaceGrid::new(spec, n_s, n_theta).map_err(fail)?;
        let sys = SlenderSystem::new(OperatorContext::new(grid), backend).map_err(fail)?;
        *out = Box::into_raw(Box::new(SlpSystem { inner: sys }));
        Ok(())
    })
}

/// Release a handle from [`slp_system_new`]; null is ignored.
///
/// # Safety
/// `sys` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slp_system_free(sys: *mut SlpSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Grid size `(n_s, n_theta)` and the condition estimate of `S_h`.
///
/// # Safety
/// `sys` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn slp_system_info(
    sys: *const SlpSystem,
    n_s: *mut usize,
    n_theta: *mut usize,
    condition: *mut f64,
) -> SlpStatus {
    guard(|| {
        let s = sys.as_ref().ok_or_else(|| null("sys"))?;
        let g = s.inner.grid();
        if !n_s.is_null() {
            *n_s = g.n_s;
        }
        if !n_theta.is_null() {
            *n_theta = g.n_theta;
        }
        if !condition.is_null() {
            *condition = s.inner.condition();
        }
        Ok(())
    })
}

unsafe fn s_data(sys: *const SlpSystem, input: *const f64, n: usize, output: *mut f64) -> Result<(&'static SlpSystem, GridFunction), SlpStatus> {
    let s = sys.as_ref().ok_or_else(|| null("sys"))?;
    if input.is_null() {
        return Err(null("input"));
    }
    if output.is_null() {
        return Err(null("output"));
    }
    let ns = s.inner.grid().n_s;
    if n != ns {
        return Err(fail(Error::Dimension(format!("length {n}, grid has n_s = {ns}"))));
    }
    let values = std::slice::from_raw_parts(input, n).to_vec();
    Ok((s, GridFunction { n_s: ns, n_theta: 1, values }))
}

/// Dirichlet-to-Neumann map: `v[0..n] -> f[0..n]` at `s_i = i/n`.
///
/// # Safety
/// `sys` must be a live handle; `v` and `f` must hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn slp_dtn(sys: *const SlpSystem, v: *const f64, n: usize, f: *mut f64) -> SlpStatus {
    guard(|| {
        let (s, data) = s_data(sys, v, n, f)?;
        let r = s.inner.dtn(&data).map_err(fail)?;
        std::slice::from_raw_parts_mut(f, n).copy_from_slice(&r.f.values);
        Ok(())
    })
}

/// Neumann-to-Dirichlet map: `f[0..n] -> v[0..n]`.
///
/// # Safety
/// `sys` must be a live handle; `f` and `v` must hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn slp_ntd(sys: *const SlpSystem, f: *const f64, n: usize, v: *mut f64) -> SlpStatus {
    guard(|| {
        let (s, data) = s_data(sys, f, n, v)?;
        let r = s.inner.ntd(&data).map_err(fail)?;
        std::slice::from_raw_parts_mut(v, n).copy_from_slice(&r.v.values);
        Ok(())
    })
}

/// Straight-cylinder symbols. `which`: 0 `m_eps_inv(k)`, 1 `m_eps(k)`,
/// 2 `m_S(k,l)`, 3 `m_D(k,l)`, 4 `m_S_inv(k)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slp_symbol(which: i32, epsilon: f64, k: i64, l: i64, out: *mut f64) -> SlpStatus {
    use slenderlap::spectral::{symbol_m_d, symbol_m_eps, symbol_m_eps_inv, symbol_m_s, symbol_m_s_inv};
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(epsilon > 0.0) {
            return Err(fail(Error::Config(format!("epsilon must be positive, got {epsilon}"))));
        }
        let v = match which {
            0 => symbol_m_eps_inv(epsilon, k),
            1 => symbol_m_eps(epsilon, k),
            2 => symbol_m_s(epsilon, k, l),
            3 => symbol_m_d(epsilon, k, l),
            4 => symbol_m_s_inv(epsilon, k),
            _ => Err(Error::Config(format!("unknown symbol selector {which}"))),
        }
        .map_err(fail)?;
        *out = v;
        Ok(())
    })
}

/// Modified Bessel functions: `kind` 0 for `I_n`, 1 for `K_n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slp_bessel(kind: i32, order: u32, z: f64, out: *mut f64) -> SlpStatus {
    use slenderlap::specfun::{bessel_i, bessel_k};
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = match kind {
            0 => bessel_i(order, z),
            1 => bessel_k(order, z),
            _ => Err(Error::Config(format!("unknown Bessel kind {kind}"))),
        }
        .map_err(fail)?;
        *out = v;
        Ok(())
    })
}
