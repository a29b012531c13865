//! C interface to `hermite-bmo`.
//!
//! Every function returns an [`HbStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`hb_last_error_message`]. Grid functions are opaque handles owned by the
//! caller and released with [`hb_grid_function_free`]. Strings returned by
//! the library are released with [`hb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hermite_bmo::bmo::bmo_h_norm;
use hermite_bmo::config::RunConfig;
use hermite_bmo::geometry::{critical_radius, SpaceContext};
use hermite_bmo::grid::{GridFunction, GridGeometry};
use hermite_bmo::hermite::{heat_action_on_one, heat_kernel_meda, riesz_kernel, MedaParam, RieszQuadrature};
use hermite_bmo::operators::{apply_heat, apply_poisson, riesz_transform, variation_operator};
use hermite_bmo::report::run_verification;
use hermite_bmo::Error;

/// Result codes. `HB_STATUS_OK` is zero; the others mirror the library's
/// error kinds plus the failures specific to the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    SingularPoint = 3,
    Accuracy = 4,
    Resolution = 5,
    RejectedInput = 6,
    Unsupported = 7,
    Ingestion = 8,
    Config = 9,
    Io = 10,
    InvalidUtf8 = 11,
    Panic = 12,
}

impl From<&Error> for HbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => HbStatus::Domain,
            Error::SingularPoint => HbStatus::SingularPoint,
            Error::Accuracy { .. } => HbStatus::Accuracy,
            Error::Resolution(_) => HbStatus::Resolution,
            Error::RejectedInput(_) => HbStatus::RejectedInput,
            Error::Unsupported(_) => HbStatus::Unsupported,
            Error::Ingestion { .. } => HbStatus::Ingestion,
            Error::Config(_) => HbStatus::Config,
            Error::Io(_) => HbStatus::Io,
        }
    }
}

/// Sampled function on `[-L, L]^n`.
pub struct HbGridFunction {
    inner: GridFunction,
}

/// Summary of a BMO_H norm estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HbBmoEstimate {
    pub osc_sup: f64,
    pub mean_sup: f64,
    pub norm: f64,
    pub refined_norm: f64,
    pub balls: usize,
    pub unresolved: usize,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(HbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(HbStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HbStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `body`, recording the message of any failure or panic.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            HbStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for a write of `T`.
unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Mehler kernel `W_{t(s)}(x, y)` for `s` in `(0, 1)`; `x` and `y` have `n`
/// coordinates.
///
/// # Safety
/// `x` and `y` must point to `n` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hb_heat_kernel(s: f64, n: usize, x: *const f64, y: *const f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let p = MedaParam::new(s)?;
        let v = heat_kernel_meda(&p, slice(x, n, "x")?, slice(y, n, "y")?)?;
        write(out, v, "out")
    })
}

/// `W_{t(s)} 1 (x)`.
///
/// # Safety
/// `x` must point to `n` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hb_heat_action_on_one(s: f64, n: usize, x: *const f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let p = MedaParam::new(s)?;
        let v = heat_action_on_one(&p, slice(x, n, "x")?)?;
        write(out, v, "out")
    })
}

/// Kernel of the Riesz transform along `axis` (0-based) off the diagonal.
///
/// # Safety
/// `x` and `y` must point to `n` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hb_riesz_kernel(axis: usize, n: usize, x: *const f64, y: *const f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let v = riesz_kernel(axis, slice(x, n, "x")?, slice(y, n, "y")?, RieszQuadrature::default())?;
        write(out, v, "out")
    })
}

/// Critical radius `gamma(x)`.
///
/// # Safety
/// `x` must point to `n` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hb_critical_radius(n: usize, x: *const f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let v = critical_radius(slice(x, n, "x")?)?;
        write(out, v, "out")
    })
}

/// ρ-variation of the sequence `values[0..len]`.
///
/// # Safety
/// `values` must point to `len` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hb_variation(values: *const f64, len: usize, rho: f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let v = variation_operator(slice(values, len, "values")?, rho)?;
        write(out, v, "out")
    })
}

/// Creates a grid function from `m^n` row-major samples (last axis
/// fastest) on `[-half_width, half_width]^n`.
///
/// # Safety
/// `samples` must point to `len` doubles and `out` to a writable handle
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_function_new(
    n: usize,
    half_width: f64,
    m: usize,
    samples: *const f64,
    len: usize,
    out: *mut *mut HbGridFunction,
) -> HbStatus {
    guard(|| {
        let geom = GridGeometry::new(n, half_width, m)?;
        let f = GridFunction::from_samples(geom, slice(samples, len, "samples")?.to_vec())?;
        write(out, Box::into_raw(Box::new(HbGridFunction { inner: f })), "out")
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `f` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_function_free(f: *mut HbGridFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_function_len(f: *const HbGridFunction) -> usize {
    f.as_ref().map_or(0, |g| g.inner.samples.len())
}

/// Copies the samples into `buf`, which must hold exactly the handle's
/// length.
///
/// # Safety
/// `f` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hb_grid_function_samples(f: *const HbGridFunction, buf: *mut f64, len: usize) -> HbStatus {
    guard(|| {
        let g = f.as_ref().ok_or_else(|| null("f"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != g.inner.samples.len() {
            return Err(Failure(
                HbStatus::RejectedInput,
                format!("buffer holds {len} values, the grid function has {}", g.inner.samples.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&g.inner.samples);
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle and `out` a writable handle pointer.
unsafe fn map_grid(
    f: *const HbGridFunction,
    out: *mut *mut HbGridFunction,
    op: impl FnOnce(&GridFunction) -> hermite_bmo::Result<GridFunction>,
) -> HbStatus {
    guard(|| {
        let g = f.as_ref().ok_or_else(|| null("f"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = op(&g.inner)?;
        write(out, Box::into_raw(Box::new(HbGridFunction { inner: r })), "out")
    })
}

/// `W_{t(s)} f` as a new handle.
///
/// # Safety
/// `f` must be a live handle and `out` a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_apply_heat(f: *const HbGridFunction, s: f64, out: *mut *mut HbGridFunction) -> HbStatus {
    map_grid(f, out, |g| apply_heat(g, &MedaParam::new(s)?))
}

/// `P_t f` as a new handle.
///
/// # Safety
/// `f` must be a live handle and `out` a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_apply_poisson(f: *const HbGridFunction, t: f64, out: *mut *mut HbGridFunction) -> HbStatus {
    map_grid(f, out, |g| apply_poisson(g, t))
}

/// Riesz transform along `axis` (0-based) as a new handle.
///
/// # Safety
/// `f` must be a live handle and `out` a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_riesz_transform(f: *const HbGridFunction, axis: usize, out: *mut *mut HbGridFunction) -> HbStatus {
    map_grid(f, out, |g| riesz_transform(g, axis))
}

/// Estimate of `||f||_{BMO_H}` over the default ball families on the
/// handle's box, with relative tolerance `tol` for the space context.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_bmo_h_norm(f: *const HbGridFunction, tol: f64, out: *mut HbBmoEstimate) -> HbStatus {
    guard(|| {
        let g = f.as_ref().ok_or_else(|| null("f"))?;
        let ctx = SpaceContext::new(g.inner.geom.n, g.inner.geom.half_width, tol)?;
        let e = bmo_h_norm(&g.inner, &ctx)?;
        write(
            out,
            HbBmoEstimate {
                osc_sup: e.osc_sup,
                mean_sup: e.mean_sup,
                norm: e.norm,
                refined_norm: e.refined_norm,
                balls: e.balls,
                unresolved: e.unresolved,
                converged: e.converged,
            },
            "out",
        )
    })
}

/// Runs the verification described by the JSON configuration `config`
/// and returns the JSON summary in `*out`, to be released with
/// [`hb_string_free`]. `*passed` receives whether every line passed.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_verify_json(config: *const c_char, out: *mut *mut c_char, passed: *mut bool) -> HbStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if out.is_null() || passed.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| Failure(HbStatus::InvalidUtf8, format!("config is not UTF-8: {e}")))?;
        let cfg = RunConfig::from_json(text)?;
        let summary = run_verification(&cfg)?;
        let json = CString::new(summary.to_json()).expect("JSON has no NUL bytes");
        passed.write(summary.passed());
        out.write(json.into_raw());
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, HbStatus::Panic);
        let msg = unsafe { CStr::from_ptr(hb_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }

    #[test]
    fn error_kinds_map_to_distinct_codes() {
        assert_eq!(HbStatus::from(&Error::SingularPoint), HbStatus::SingularPoint);
        assert_eq!(HbStatus::from(&Error::Config("x".into())), HbStatus::Config);
        assert_eq!(
            HbStatus::from(&Error::Ingestion {
                row: 2,
                message: "x".into()
            }),
            HbStatus::Ingestion
        );
    }
}
