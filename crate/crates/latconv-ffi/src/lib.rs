//! C ABI for `latconv`.
//!
//! Objects are opaque handles created by `latconv_*_new`-style calls and released with the
//! matching `_free`. Every fallible call returns a [`LatconvStatus`]; on failure the message
//! is available from [`latconv_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use latconv::error::LatconvError;
use latconv::examples::builtin;
use latconv::expansion::{analyze, SpectralAnalysis, Verdict};
use latconv::format::parse_function;
use latconv::lattice::{DenseGrid, LatticeFunction, PowerConfig, PowerMethod};
use latconv::verify::{stability_report, ReportVerdict};
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatconvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Resource = 4,
    NotNormalized = 5,
    AnalysisFailed = 6,
    HypothesisViolation = 7,
    NotProbability = 8,
    Numerical = 9,
    Io = 10,
    Panic = 11,
}

/// Classification of a unit-modulus point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatconvVerdict {
    PositiveHomogeneousType = 0,
    NotPositiveHomogeneousType = 1,
    Indeterminate = 2,
}

/// Outcome of a stability report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatconvStability {
    Stable = 0,
    Unstable = 1,
    Inconclusive = 2,
}

/// Power algorithm selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatconvMethod {
    Direct = 0,
    Fast = 1,
    Spectral = 2,
}

/// A finitely supported function on `Z^d`.
pub struct LatconvFunction(LatticeFunction);

/// Values on a rectangular lattice box, row-major with the last axis fastest.
pub struct LatconvGrid(DenseGrid);

/// Unit-modulus points of a function and their classification.
pub struct LatconvAnalysis(SpectralAnalysis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &LatconvError) -> LatconvStatus {
    match e {
        LatconvError::InvalidArgument(_)
        | LatconvError::DimensionMismatch { .. }
        | LatconvError::ZeroFunction
        | LatconvError::InvalidPolynomial(_) => LatconvStatus::InvalidArgument,
        LatconvError::Parse { .. } => LatconvStatus::Parse,
        LatconvError::Resource(_) => LatconvStatus::Resource,
        LatconvError::NotNormalized(_) | LatconvError::NotUnitModulus(_) => {
            LatconvStatus::NotNormalized
        }
        LatconvError::AnalysisFailed(_) => LatconvStatus::AnalysisFailed,
        LatconvError::HypothesisViolation(_) => LatconvStatus::HypothesisViolation,
        LatconvError::NotProbability(_) => LatconvStatus::NotProbability,
        LatconvError::Numerical(_) => LatconvStatus::Numerical,
        LatconvError::Io(_) => LatconvStatus::Io,
    }
}

/// Runs `body`, converting errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), (LatconvStatus, String)>) -> LatconvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LatconvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LatconvStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (LatconvStatus, String)>;
}

impl<T> IntoFfi<T> for latconv::error::Result<T> {
    fn ffi(self) -> Result<T, (LatconvStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (LatconvStatus, String) {
    (LatconvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LatconvStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (LatconvStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LatconvStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            LatconvStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

/// Message of the last failed call on this thread, or null. Valid until the next failure.
#[no_mangle]
pub extern "C" fn latconv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn latconv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a function from `count` points: `coords` holds `count * dim` integers, point-major.
///
/// # Safety
/// `coords`, `re` and `im` must point to arrays of the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_new(
    dim: usize,
    count: usize,
    coords: *const i64,
    re: *const f64,
    im: *const f64,
    out: *mut *mut LatconvFunction,
) -> LatconvStatus {
    guard(|| {
        if count > 0 && (coords.is_null() || re.is_null() || im.is_null()) {
            return Err(null("input array"));
        }
        let (xs, res, ims) = if count == 0 {
            (&[][..], &[][..], &[][..])
        } else {
            (
                slice::from_raw_parts(coords, count * dim),
                slice::from_raw_parts(re, count),
                slice::from_raw_parts(im, count),
            )
        };
        let entries = (0..count).map(|k| {
            (
                xs[k * dim..(k + 1) * dim].to_vec(),
                Complex64::new(res[k], ims[k]),
            )
        });
        let f = LatticeFunction::from_entries(dim, entries).ffi()?;
        store(out, LatconvFunction(f))
    })
}

/// Builds a builtin example such as `"intro"` or `"srw:2"`.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_builtin(
    name: *const c_char,
    out: *mut *mut LatconvFunction,
) -> LatconvStatus {
    guard(|| {
        let f = builtin(c_str(name, "name")?).ffi()?;
        store(out, LatconvFunction(f))
    })
}

/// Parses the text function format.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_parse(
    text: *const c_char,
    out: *mut *mut LatconvFunction,
) -> LatconvStatus {
    guard(|| {
        let f = parse_function(c_str(text, "text")?).ffi()?;
        store(out, LatconvFunction(f))
    })
}

/// # Safety
/// `f` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_free(f: *mut LatconvFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Dimension, or 0 for null.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_dim(f: *const LatconvFunction) -> usize {
    f.as_ref().map_or(0, |f| f.0.dim())
}

/// Number of support points, or 0 for null.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latconv_function_len(f: *const LatconvFunction) -> usize {
    f.as_ref().map_or(0, |f| f.0.len())
}

/// `f^(n)` on its bounding box.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_power(
    f: *const LatconvFunction,
    n: u64,
    method: LatconvMethod,
    out: *mut *mut LatconvGrid,
) -> LatconvStatus {
    guard(|| {
        let f = deref(f, "function")?;
        let m = match method {
            LatconvMethod::Direct => PowerMethod::Direct,
            LatconvMethod::Fast => PowerMethod::Fast,
            LatconvMethod::Spectral => PowerMethod::Spectral,
        };
        let g = f.0.power_dense(n, m, &PowerConfig::default()).ffi()?;
        store(out, LatconvGrid(g))
    })
}

/// # Safety
/// `g` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn latconv_grid_free(g: *mut LatconvGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Dimension, or 0 for null.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latconv_grid_dim(g: *const LatconvGrid) -> usize {
    g.as_ref().map_or(0, |g| g.0.dim())
}

/// Number of stored values, or 0 for null.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latconv_grid_len(g: *const LatconvGrid) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Writes the lower corner and the side lengths, `dim` entries each.
///
/// # Safety
/// `g` must be a live handle; `lo` and `shape` must hold `dim` entries.
#[no_mangle]
pub unsafe extern "C" fn latconv_grid_bounds(
    g: *const LatconvGrid,
    lo: *mut i64,
    shape: *mut usize,
) -> LatconvStatus {
    guard(|| {
        let g = deref(g, "grid")?;
        if lo.is_null() || shape.is_null() {
            return Err(null("output array"));
        }
        let d = g.0.dim();
        slice::from_raw_parts_mut(lo, d).copy_from_slice(g.0.lo());
        slice::from_raw_parts_mut(shape, d).copy_from_slice(g.0.shape());
        Ok(())
    })
}

/// Copies the values into `re` and `im`, each of length `len` (must equal the grid length).
///
/// # Safety
/// `g` must be a live handle; `re` and `im` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn latconv_grid_values(
    g: *const LatconvGrid,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> LatconvStatus {
    guard(|| {
        let g = deref(g, "grid")?;
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        if len != g.0.len() {
            return Err((
                LatconvStatus::InvalidArgument,
                format!("buffer holds {len} values, grid has {}", g.0.len()),
            ));
        }
        let (re, im) = (
            slice::from_raw_parts_mut(re, len),
            slice::from_raw_parts_mut(im, len),
        );
        for (k, v) in g.0.data().iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        Ok(())
    })
}

/// Locates and classifies the unit-modulus points of `f`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_analyze(
    f: *const LatconvFunction,
    out: *mut *mut LatconvAnalysis,
) -> LatconvStatus {
    guard(|| {
        let f = deref(f, "function")?;
        let a = analyze(&f.0).ffi()?;
        store(out, LatconvAnalysis(a))
    })
}

/// # Safety
/// `a` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn latconv_analysis_free(a: *mut LatconvAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

fn verdict(v: Verdict) -> LatconvVerdict {
    match v {
        Verdict::PositiveHomogeneousType => LatconvVerdict::PositiveHomogeneousType,
        Verdict::NotPositiveHomogeneousType => LatconvVerdict::NotPositiveHomogeneousType,
        Verdict::Indeterminate => LatconvVerdict::Indeterminate,
    }
}

/// Overall verdict and, when every point is of positive homogeneous type, the decay
/// exponent as `numer / denom` (both set to 0 otherwise).
///
/// # Safety
/// `a` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_analysis_summary(
    a: *const LatconvAnalysis,
    overall: *mut LatconvVerdict,
    mu_numer: *mut i64,
    mu_denom: *mut i64,
) -> LatconvStatus {
    guard(|| {
        let a = deref(a, "analysis")?;
        if overall.is_null() || mu_numer.is_null() || mu_denom.is_null() {
            return Err(null("output pointer"));
        }
        *overall = verdict(a.0.verdict);
        let (n, d) = a.0.mu.map_or((0, 0), |m| (*m.numer(), *m.denom()));
        *mu_numer = n;
        *mu_denom = d;
        Ok(())
    })
}

/// Number of unit-modulus points, or 0 for null.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn latconv_analysis_point_count(a: *const LatconvAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.0.points.len())
}

/// Location, verdict and drift of point `k`. `xi` and `drift` hold `dim` entries; the drift
/// is filled with NaN when the point is not of positive homogeneous type.
///
/// # Safety
/// `a` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_analysis_point(
    a: *const LatconvAnalysis,
    k: usize,
    xi: *mut f64,
    drift: *mut f64,
    point_verdict: *mut LatconvVerdict,
) -> LatconvStatus {
    guard(|| {
        let a = deref(a, "analysis")?;
        let p = a.0.points.get(k).ok_or_else(|| {
            (
                LatconvStatus::InvalidArgument,
                format!("point {k} out of range ({} points)", a.0.points.len()),
            )
        })?;
        if xi.is_null() || drift.is_null() || point_verdict.is_null() {
            return Err(null("output pointer"));
        }
        let d = a.0.dim;
        slice::from_raw_parts_mut(xi, d).copy_from_slice(&p.xi);
        let out = slice::from_raw_parts_mut(drift, d);
        match p.drift() {
            Some(v) => out.copy_from_slice(v),
            None => out.fill(f64::NAN),
        }
        *point_verdict = verdict(p.classification.verdict);
        Ok(())
    })
}

/// Stability report up to `n_max`: the verdict and the late-to-early `l^1` ratio.
///
/// # Safety
/// `f` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn latconv_stability(
    f: *const LatconvFunction,
    n_max: u64,
    result: *mut LatconvStability,
    ratio: *mut f64,
) -> LatconvStatus {
    guard(|| {
        let f = deref(f, "function")?;
        if result.is_null() || ratio.is_null() {
            return Err(null("output pointer"));
        }
        let rep = stability_report(&f.0, n_max, &PowerConfig::default()).ffi()?;
        *result = match rep.verdict {
            ReportVerdict::Stable => LatconvStability::Stable,
            ReportVerdict::Unstable => LatconvStability::Unstable,
            _ => LatconvStability::Inconclusive,
        };
        *ratio = rep.ratio.unwrap_or(f64::NAN);
        Ok(())
    })
}
