//! C ABI over the `qls` library.
//!
//! Systems live behind opaque `QlsSystem` handles created from JSON. Every
//! call returns a `QlsStatus`; on failure `qls_last_error()` gives a message
//! valid until the next call on the same thread. Strings returned by the
//! library are freed with `qls_string_free`, handles with `qls_system_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qls::absorber::dual_system;
use qls::estimation::{stationary_qfi_rate_freq, stationary_qfi_rate_time};
use qls::io::{covariance_from_json, family_from_json, system_from_json, system_to_json};
use qls::stationary::power_spectrum;
use qls::system::{is_hurwitz, ParamFamily};
use qls::{InputCovariance, QLSystem, QlsError, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    NumericalFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Opaque system handle.
pub struct QlsSystem {
    inner: QLSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&ch| ch != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn from_error(e: &QlsError) -> QlsStatus {
    set_error(&format!("{}: {}", e.kind(), e));
    if e.is_input_error() {
        QlsStatus::InvalidInput
    } else {
        QlsStatus::NumericalFailure
    }
}

fn guard(f: impl FnOnce() -> Result<(), QlsStatus>) -> QlsStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QlsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            QlsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, QlsStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(QlsStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        QlsStatus::InvalidInput
    })
}

fn parse_json(text: &str) -> Result<serde_json::Value, QlsStatus> {
    serde_json::from_str(text).map_err(|e| from_error(&QlsError::Parse(e.to_string())))
}

unsafe fn system_ref<'a>(sys: *const QlsSystem) -> Result<&'a QLSystem, QlsStatus> {
    if sys.is_null() {
        set_error("null system handle");
        return Err(QlsStatus::NullArgument);
    }
    Ok(&(*sys).inner)
}

fn check_out<T>(p: *mut T) -> Result<(), QlsStatus> {
    if p.is_null() {
        set_error("null output pointer");
        return Err(QlsStatus::NullArgument);
    }
    Ok(())
}

fn load_cov(text: Option<&str>, m: usize) -> Result<InputCovariance, QlsStatus> {
    match text {
        Some(t) => covariance_from_json(&parse_json(t)?).map_err(|e| from_error(&e)),
        None => Ok(InputCovariance::vacuum(m)),
    }
}

/// Message for the last failed call on this thread; empty after success.
#[no_mangle]
pub extern "C" fn qls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse a system from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qls_system_from_json(json: *const c_char, out: *mut *mut QlsSystem) -> QlsStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let v = parse_json(read_str(json)?)?;
        let inner = system_from_json(&v).map_err(|e| from_error(&e))?;
        *out = Box::into_raw(Box::new(QlsSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qls_system_free(sys: *mut QlsSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// JSON form of a system; free the result with `qls_string_free`.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qls_system_to_json(sys: *const QlsSystem, out: *mut *mut c_char) -> QlsStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let s = serde_json::to_string(&system_to_json(system_ref(sys)?)).expect("JSON values serialize");
        *out = CString::new(s).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of modes and channels.
///
/// # Safety
/// `sys` must be a live handle; `n` and `m` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qls_system_dims(sys: *const QlsSystem, n: *mut usize, m: *mut usize) -> QlsStatus {
    guard(|| {
        check_out(n)?;
        check_out(m)?;
        let s = system_ref(sys)?;
        *n = s.n();
        *m = s.m();
        Ok(())
    })
}

/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qls_system_is_hurwitz(sys: *const QlsSystem, out: *mut i32) -> QlsStatus {
    guard(|| {
        check_out(out)?;
        *out = is_hurwitz(system_ref(sys)?, 1e-12).map_err(|e| from_error(&e))? as i32;
        Ok(())
    })
}

unsafe fn write_matrix(m: &qls::CMatrix, out: *mut f64, len: usize) -> Result<(), QlsStatus> {
    check_out(out)?;
    let need = 2 * m.nrows() * m.ncols();
    if len < need {
        set_error(&format!("buffer holds {} doubles, {} needed", len, need));
        return Err(QlsStatus::BufferTooSmall);
    }
    let buf = std::slice::from_raw_parts_mut(out, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let k = 2 * (i * m.ncols() + j);
            buf[k] = z.re;
            buf[k + 1] = z.im;
        }
    }
    Ok(())
}

/// Doubled-up transfer function at `s = re + i im`, written row-major as
/// interleaved `(re, im)` pairs; `len` is the buffer size in doubles and
/// must be at least `2 (2m)^2`.
///
/// # Safety
/// `sys` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qls_transfer_function(sys: *const QlsSystem, re: f64, im: f64, out: *mut f64, len: usize) -> QlsStatus {
    guard(|| {
        let m = system_ref(sys)?.transfer_function(C64::new(re, im)).map_err(|e| from_error(&e))?;
        write_matrix(&m, out, len)
    })
}

/// Power spectrum at `s`; `cov_json` may be null for vacuum input.
///
/// # Safety
/// As for `qls_transfer_function`; `cov_json` is null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qls_power_spectrum(
    sys: *const QlsSystem,
    cov_json: *const c_char,
    re: f64,
    im: f64,
    out: *mut f64,
    len: usize,
) -> QlsStatus {
    guard(|| {
        let s = system_ref(sys)?;
        let text = if cov_json.is_null() { None } else { Some(read_str(cov_json)?) };
        let v = load_cov(text, s.m())?;
        let m = power_spectrum(s, &v, C64::new(re, im)).map_err(|e| from_error(&e))?;
        write_matrix(&m, out, len)
    })
}

/// Coherent absorber of `sys`. On success `*dual` is a new handle.
///
/// # Safety
/// `sys` must be a live handle; `dual` and `purity_residual` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qls_absorber(
    sys: *const QlsSystem,
    gm_tol: f64,
    dual: *mut *mut QlsSystem,
    purity_residual: *mut f64,
) -> QlsStatus {
    guard(|| {
        check_out(dual)?;
        check_out(purity_residual)?;
        *dual = ptr::null_mut();
        let res = dual_system(system_ref(sys)?, gm_tol).map_err(|e| from_error(&e))?;
        *purity_residual = res.purity_residual;
        *dual = Box::into_raw(Box::new(QlsSystem { inner: res.dual }));
        Ok(())
    })
}

/// Stationary QFI rate of an affine family (JSON) at `theta0`. `method` is
/// 0 for the time-domain formula, 1 for frequency-domain quadrature;
/// `cov_json` may be null for vacuum input.
///
/// # Safety
/// Strings must be NUL-terminated (or null for `cov_json`); `out` valid.
#[no_mangle]
pub unsafe extern "C" fn qls_qfi_rate(
    family_json: *const c_char,
    cov_json: *const c_char,
    theta0: f64,
    method: i32,
    out: *mut f64,
) -> QlsStatus {
    guard(|| {
        check_out(out)?;
        let fam = family_from_json(&parse_json(read_str(family_json)?)?).map_err(|e| from_error(&e))?;
        let m = fam.system(theta0).map_err(|e| from_error(&e))?.m();
        let text = if cov_json.is_null() { None } else { Some(read_str(cov_json)?) };
        let v = load_cov(text, m)?;
        let rep = match method {
            0 => stationary_qfi_rate_time(&fam, theta0, &v),
            1 => stationary_qfi_rate_freq(&fam, theta0, &v, &[]),
            _ => {
                set_error("method must be 0 (time) or 1 (frequency)");
                return Err(QlsStatus::InvalidInput);
            }
        }
        .map_err(|e| from_error(&e))?;
        *out = rep.value;
        Ok(())
    })
}
