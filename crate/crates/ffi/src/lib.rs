//! C ABI for the magmar library.
//!
//! Models live behind an opaque `MagmarModel` handle created by
//! [`magmar_model_parse`] and released with [`magmar_model_free`]. Every
//! fallible function returns a [`MagmarStatus`]; on failure the message is
//! available from [`magmar_last_error`] on the same thread until the next
//! failing call. Output pointers are only written on success (the size hint
//! of [`magmar_model_string`] excepted).

use magmar::copula::{CopulaSpec, Family};
use magmar::estimation::{self, FitOptions};
use magmar::model::{self, MagmarSpec};
use magmar::MagmarError;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagmarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed model string or parameter list.
    InvalidArgument = 3,
    /// Bad input series.
    Data = 4,
    /// Root finding, quadrature or likelihood evaluation failed.
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque model handle.
pub struct MagmarModel {
    spec: MagmarSpec,
}

/// Summary of a fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MagmarFitSummary {
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &MagmarError) -> MagmarStatus {
    if e.is_numerical() {
        return MagmarStatus::Numerical;
    }
    match e {
        MagmarError::Data { .. }
        | MagmarError::Io(_)
        | MagmarError::NotInUnitInterval(_)
        | MagmarError::SeriesTooShort { .. }
        | MagmarError::DimensionMismatch { .. } => MagmarStatus::Data,
        _ => MagmarStatus::InvalidArgument,
    }
}

struct Failure(MagmarStatus, String);

impl From<MagmarError> for Failure {
    fn from(e: MagmarError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MagmarStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> MagmarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MagmarStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MagmarStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const MagmarModel) -> Result<&'a MagmarModel, Failure> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn magmar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a model string such as `MAGMAR(4,1)-ging-t` into a new handle
/// with default parameters.
///
/// # Safety
/// `text` must be a nul-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_parse(text: *const c_char, out_model: *mut *mut MagmarModel) -> MagmarStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let out_model = out(out_model, "out_model")?;
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(MagmarStatus::InvalidUtf8, "model string is not UTF-8".into()))?;
        let spec = magmar::model_string::parse_model_string(text)?;
        *out_model = Box::into_raw(Box::new(MagmarModel { spec }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_free(model: *mut MagmarModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of free parameters, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_n_params(model: *const MagmarModel) -> usize {
    model.as_ref().map_or(0, |m| m.spec.n_params())
}

/// Copies the parameters (AR part first) into `out_params`.
///
/// # Safety
/// `out_params` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_get_params(
    model: *const MagmarModel,
    out_params: *mut f64,
    len: usize,
) -> MagmarStatus {
    guard(|| {
        let params = model_ref(model)?.spec.params();
        if len < params.len() {
            return Err(Failure(
                MagmarStatus::BufferTooSmall,
                format!("need {} parameters, buffer holds {len}", params.len()),
            ));
        }
        slice_mut(out_params, params.len(), "out_params")?.copy_from_slice(&params);
        Ok(())
    })
}

/// Replaces the parameters after validating them.
///
/// # Safety
/// `params` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_set_params(
    model: *mut MagmarModel,
    params: *const f64,
    len: usize,
) -> MagmarStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let params = slice(params, len, "params")?;
        m.spec = m.spec.with_params(params)?;
        Ok(())
    })
}

/// Writes the canonical model string, nul-terminated, into `buf`.
/// `out_needed` (optional) receives the required size including the nul.
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn magmar_model_string(
    model: *const MagmarModel,
    buf: *mut c_char,
    len: usize,
    out_needed: *mut usize,
) -> MagmarStatus {
    guard(|| {
        let text = model_ref(model)?.spec.model_string();
        let needed = text.len() + 1;
        if let Some(n) = out_needed.as_mut() {
            *n = needed;
        }
        if len < needed {
            return Err(Failure(MagmarStatus::BufferTooSmall, format!("need {needed} bytes, buffer holds {len}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Simulates `length` observations after `burn_in` discarded ones.
///
/// # Safety
/// `out_series` must hold `length` doubles.
#[no_mangle]
pub unsafe extern "C" fn magmar_simulate(
    model: *const MagmarModel,
    length: usize,
    seed: u64,
    burn_in: usize,
    out_series: *mut f64,
) -> MagmarStatus {
    guard(|| {
        let spec = &model_ref(model)?.spec;
        let dst = slice_mut(out_series, length, "out_series")?;
        let sim = model::simulate(spec, length, seed, burn_in)?;
        dst.copy_from_slice(sim.series.values());
        Ok(())
    })
}

/// Negative log pseudo-likelihood of a series in (0, 1).
///
/// # Safety
/// `series` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn magmar_neg_log_likelihood(
    model: *const MagmarModel,
    series: *const f64,
    len: usize,
    init: f64,
    out_nll: *mut f64,
) -> MagmarStatus {
    guard(|| {
        let spec = &model_ref(model)?.spec;
        let series = slice(series, len, "series")?;
        let out_nll = out(out_nll, "out_nll")?;
        *out_nll = model::neg_log_likelihood(spec, series, init)?;
        Ok(())
    })
}

/// Fits the families of `skeleton` to a series. On success a new handle
/// with the estimates is stored in `out_model`; `out_summary` is optional.
///
/// # Safety
/// `series` must hold `len` doubles; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn magmar_fit(
    skeleton: *const MagmarModel,
    series: *const f64,
    len: usize,
    init: f64,
    seed: u64,
    out_model: *mut *mut MagmarModel,
    out_summary: *mut MagmarFitSummary,
) -> MagmarStatus {
    guard(|| {
        let spec = &model_ref(skeleton)?.spec;
        let series = slice(series, len, "series")?;
        let out_model = out(out_model, "out_model")?;
        let opts = FitOptions { init, seed, ..FitOptions::default() };
        let r = estimation::fit(spec, series, &opts)?;
        if let Some(s) = out_summary.as_mut() {
            *s = MagmarFitSummary {
                nll: r.nll,
                aic: r.aic,
                bic: r.bic,
                n_params: r.n_params,
                n_obs: r.n_obs,
                converged: r.converged,
            };
        }
        *out_model = Box::into_raw(Box::new(MagmarModel { spec: r.spec }));
        Ok(())
    })
}

/// Which pair-copula function [`magmar_copula_eval`] computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagmarCopulaFn {
    Cdf = 0,
    Density = 1,
    /// Conditional CDF of the first argument given the second.
    H2 = 2,
    /// Inverse of `H2` in its first argument.
    H2Inverse = 3,
}

/// Evaluates a bivariate copula of family `code` (`'n'`, `'t'`, `'g'` or
/// `'i'`) with the given parameters at `(u1, u2)`.
///
/// # Safety
/// `params` must hold `n_params` doubles.
#[no_mangle]
pub unsafe extern "C" fn magmar_copula_eval(
    code: c_char,
    params: *const f64,
    n_params: usize,
    which: MagmarCopulaFn,
    u1: f64,
    u2: f64,
    out_value: *mut f64,
) -> MagmarStatus {
    guard(|| {
        let family = u8::try_from(code)
            .ok()
            .and_then(|b| Family::from_code(b as char))
            .ok_or_else(|| Failure(MagmarStatus::InvalidArgument, format!("unknown copula code {code}")))?;
        let params = slice(params, n_params, "params")?;
        let out_value = out(out_value, "out_value")?;
        let c = CopulaSpec::new(family, params)?;
        *out_value = match which {
            MagmarCopulaFn::Cdf => c.cdf(u1, u2),
            MagmarCopulaFn::Density => c.density(u1, u2),
            MagmarCopulaFn::H2 => c.h2(u1, u2),
            MagmarCopulaFn::H2Inverse => c.h2_inv(u1, u2)?,
        };
        Ok(())
    })
}
