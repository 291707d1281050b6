//! C ABI over the exact filter.
//!
//! All handles are opaque and owned by the caller once created; release
//! them with the matching `*_free` function. Every fallible function
//! returns a [`CfStatus`] and writes results through out-pointers, which
//! are left untouched on failure. Panics never cross the boundary.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cirfilter::{mixture_from_state, survival_full_info, Error, FilterState, ModelParams};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    OutOfDomain = 3,
    NonMonotoneJumps = 4,
    TimeRegression = 5,
    DegenerateState = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

impl From<&Error> for CfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NonPositiveParameter(_)
            | Error::NonFiniteParameter(_)
            | Error::InvalidGrid(_)
            | Error::InvalidInput(_) => CfStatus::InvalidParameter,
            Error::OutOfDomain { .. } => CfStatus::OutOfDomain,
            Error::NonMonotoneJumps(_) => CfStatus::NonMonotoneJumps,
            Error::TimeRegression { .. } => CfStatus::TimeRegression,
            Error::DegenerateState(_) | Error::Degeneracy(_) => CfStatus::DegenerateState,
            Error::StepFailure { .. } => CfStatus::Internal,
        }
    }
}

/// Model parameters plus the prior rate `phi`.
pub struct CfParams {
    params: ModelParams,
    phi: f64,
}

/// Filter state at a given time.
pub struct CfFilter {
    state: FilterState,
}

fn guard(f: impl FnOnce() -> Result<(), CfStatus>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => CfStatus::Panic,
    }
}

fn lift<T>(r: cirfilter::Result<T>) -> Result<T, CfStatus> {
    r.map_err(|e| CfStatus::from(&e))
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, CfStatus> {
    p.as_ref().ok_or(CfStatus::NullPointer)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), CfStatus> {
    if out.is_null() {
        return Err(CfStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn cf_status_message(status: CfStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        CfStatus::Ok => c"ok",
        CfStatus::NullPointer => c"null pointer argument",
        CfStatus::InvalidParameter => c"invalid parameter",
        CfStatus::OutOfDomain => c"argument outside the transform domain",
        CfStatus::NonMonotoneJumps => c"jump times must be strictly increasing",
        CfStatus::TimeRegression => c"time must not decrease",
        CfStatus::DegenerateState => c"degenerate filter state",
        CfStatus::BufferTooSmall => c"output buffer too small",
        CfStatus::Internal => c"internal error",
        CfStatus::Panic => c"internal panic",
    };
    msg.as_ptr()
}

/// Validate parameters and create a handle.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_params_new(
    alpha: f64,
    mu0: f64,
    beta: f64,
    phi: f64,
    out: *mut *mut CfParams,
) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(CfStatus::NullPointer);
        }
        let params = lift(ModelParams::new(alpha, mu0, beta))?;
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(CfStatus::InvalidParameter);
        }
        put(out, Box::into_raw(Box::new(CfParams { params, phi })))
    })
}

/// Release a parameter handle. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle from [`cf_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_params_free(p: *mut CfParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Full-information survival `P(no jump in (s, s+dt] | λ_s)`.
///
/// # Safety
/// `p` must be a live parameter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_survival_full_info(
    p: *const CfParams,
    lambda_s: f64,
    dt: f64,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let p = get(p)?;
        if !(lambda_s >= 0.0 && dt >= 0.0) {
            return Err(CfStatus::InvalidParameter);
        }
        put(out, survival_full_info(lambda_s, dt, &p.params))
    })
}

/// Filter at time zero, started from the Gamma prior.
///
/// # Safety
/// `p` must be a live parameter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_new(p: *const CfParams, out: *mut *mut CfFilter) -> CfStatus {
    guard(|| {
        let p = get(p)?;
        if out.is_null() {
            return Err(CfStatus::NullPointer);
        }
        let state = lift(FilterState::init(&p.params, p.phi))?;
        put(out, Box::into_raw(Box::new(CfFilter { state })))
    })
}

/// Release a filter handle. Null is ignored.
///
/// # Safety
/// `f` must be null or a handle from [`cf_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_free(f: *mut CfFilter) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

unsafe fn update(
    f: *mut CfFilter,
    step: impl FnOnce(&FilterState) -> cirfilter::Result<FilterState>,
) -> CfStatus {
    guard(|| {
        let f = f.as_mut().ok_or(CfStatus::NullPointer)?;
        f.state = lift(step(&f.state))?;
        Ok(())
    })
}

/// Propagate to time `t` with no jump in between.
///
/// # Safety
/// `f` must be a live filter handle.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_advance(f: *mut CfFilter, t: f64) -> CfStatus {
    update(f, |s| s.advance(t))
}

/// Propagate to time `t` and register a jump there.
///
/// # Safety
/// `f` must be a live filter handle.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_jump(f: *mut CfFilter, t: f64) -> CfStatus {
    update(f, |s| s.observe_jump(t))
}

/// Current time and number of jumps seen.
///
/// # Safety
/// `f` must be a live filter handle; `t` and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_position(
    f: *const CfFilter,
    t: *mut f64,
    n: *mut usize,
) -> CfStatus {
    guard(|| {
        let f = get(f)?;
        if t.is_null() || n.is_null() {
            return Err(CfStatus::NullPointer);
        }
        put(t, f.state.t())?;
        put(n, f.state.n())
    })
}

/// Conditional moment generating function at `s`.
///
/// # Safety
/// `f` must be a live filter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_mgf(f: *const CfFilter, s: f64, out: *mut f64) -> CfStatus {
    guard(|| {
        let f = get(f)?;
        let v = lift(f.state.conditional_mgf(s))?;
        put(out, v)
    })
}

/// Conditional mean intensity.
///
/// # Safety
/// `f` must be a live filter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_mean(f: *const CfFilter, out: *mut f64) -> CfStatus {
    guard(|| put(out, get(f)?.state.conditional_mean()))
}

/// Common rate of the Gamma mixture posterior.
///
/// # Safety
/// `f` must be a live filter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_rate(f: *const CfFilter, out: *mut f64) -> CfStatus {
    guard(|| put(out, get(f)?.state.rate()))
}

/// Probability of no jump over the next `dt`, given the jumps so far.
///
/// # Safety
/// `f` must be a live filter handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_survival(
    f: *const CfFilter,
    dt: f64,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let f = get(f)?;
        let v = lift(f.state.conditional_survival(dt))?;
        put(out, v)
    })
}

/// Mixing weights `pi_0..pi_n`. `needed` always receives `n + 1`; if
/// `len` is smaller, nothing else is written and `BUFFER_TOO_SMALL` is
/// returned. `weights` may be null when `len` is zero.
///
/// # Safety
/// `f` must be a live filter handle, `needed` writable, and `weights`
/// valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cf_filter_mixture_weights(
    f: *const CfFilter,
    weights: *mut f64,
    len: usize,
    needed: *mut usize,
) -> CfStatus {
    guard(|| {
        let f = get(f)?;
        let mix = mixture_from_state(&f.state);
        put(needed, mix.weights.len())?;
        if len < mix.weights.len() {
            return Err(CfStatus::BufferTooSmall);
        }
        if weights.is_null() {
            return Err(CfStatus::NullPointer);
        }
        ptr::copy_nonoverlapping(mix.weights.as_ptr(), weights, mix.weights.len());
        Ok(())
    })
}
