use std::ffi::{CStr, CString};
use std::ptr;

use qls_ffi::*;

const CAVITY: &str = r#"{"n":1,"m":1,"C":{"minus":[[1.3]]},"Omega":{"minus":[[0.0]]}}"#;
const TWO_MODE: &str = r#"{"n":2,"m":1,"C":{"minus":[[5,4]],"plus":[[1,[0,-1]]]},
 "A":{"minus":[[[-12,-2],[0,0.5]],[[-20,-0.5],[-7.5,-6]]],"plus":[[1,[-2,-2.5]],[[-6,-7.5],[0,-2]]]}}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qls_last_error()).to_string_lossy().into_owned() }
}

fn load(json: &str) -> *mut QlsSystem {
    let c = CString::new(json).unwrap();
    let mut sys = ptr::null_mut();
    let st = unsafe { qls_system_from_json(c.as_ptr(), &mut sys) };
    assert_eq!(st, QlsStatus::Ok, "{}", last_error());
    assert!(!sys.is_null());
    sys
}

#[test]
fn round_trip_and_dims() {
    let sys = load(TWO_MODE);
    let (mut n, mut m) = (0usize, 0usize);
    unsafe {
        assert_eq!(qls_system_dims(sys, &mut n, &mut m), QlsStatus::Ok);
        assert_eq!((n, m), (2, 1));
        let mut s = ptr::null_mut();
        assert_eq!(qls_system_to_json(sys, &mut s), QlsStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        qls_string_free(s);
        let back = load(&text);
        let mut hz = -1;
        assert_eq!(qls_system_is_hurwitz(back, &mut hz), QlsStatus::Ok);
        assert_eq!(hz, 1);
        qls_system_free(back);
        qls_system_free(sys);
    }
}

#[test]
fn cavity_transfer_function() {
    // single cavity with rate k = 1.3^2: Xi(s) = (s - k/2) / (s + k/2)
    let sys = load(CAVITY);
    let mut buf = [0.0; 8];
    let k = 1.3f64 * 1.3;
    unsafe {
        assert_eq!(qls_transfer_function(sys, 0.0, 0.7, buf.as_mut_ptr(), buf.len()), QlsStatus::Ok);
        qls_system_free(sys);
    }
    let s = qls::C64::new(0.0, 0.7);
    let want = (s - k / 2.0) / (s + k / 2.0);
    assert!((buf[0] - want.re).abs() < 1e-12 && (buf[1] - want.im).abs() < 1e-12);
    // off-diagonal blocks vanish for a passive system
    assert!(buf[2].abs() < 1e-14 && buf[3].abs() < 1e-14);
}

#[test]
fn small_buffer_and_null_arguments() {
    let sys = load(CAVITY);
    let mut buf = [0.0; 3];
    unsafe {
        assert_eq!(qls_transfer_function(sys, 0.0, 1.0, buf.as_mut_ptr(), buf.len()), QlsStatus::BufferTooSmall);
        assert!(last_error().contains("needed"));
        assert_eq!(qls_transfer_function(ptr::null(), 0.0, 1.0, buf.as_mut_ptr(), 8), QlsStatus::NullArgument);
        let mut out = ptr::null_mut();
        assert_eq!(qls_system_from_json(ptr::null(), &mut out), QlsStatus::NullArgument);
        qls_system_free(sys);
        qls_system_free(ptr::null_mut());
        qls_string_free(ptr::null_mut());
    }
}

#[test]
fn malformed_input_is_an_input_error() {
    let bad = CString::new("{\"n\": 1").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { qls_system_from_json(bad.as_ptr(), &mut out) };
    assert_eq!(st, QlsStatus::InvalidInput);
    assert!(out.is_null());
    assert!(last_error().starts_with("parse"), "{}", last_error());
}

#[test]
fn absorber_of_two_mode_system() {
    let sys = load(TWO_MODE);
    let mut dual = ptr::null_mut();
    let mut purity = f64::NAN;
    unsafe {
        assert_eq!(qls_absorber(sys, 1e-9, &mut dual, &mut purity), QlsStatus::Ok, "{}", last_error());
        assert!(purity < 1e-9);
        let (mut n, mut m) = (0, 0);
        qls_system_dims(dual, &mut n, &mut m);
        assert_eq!((n, m), (2, 1));
        qls_system_free(dual);
        qls_system_free(sys);
    }
}

#[test]
fn passive_system_has_no_absorber() {
    let sys = load(CAVITY);
    let mut dual = ptr::null_mut();
    let mut purity = 0.0;
    let st = unsafe { qls_absorber(sys, 1e-9, &mut dual, &mut purity) };
    assert_eq!(st, QlsStatus::InvalidInput);
    assert!(dual.is_null());
    unsafe { qls_system_free(sys) };
}

#[test]
fn qfi_rate_matches_closed_form() {
    let fam = CString::new(format!(
        r#"{{"base": {}, "terms": [{{"target":"Omega","row":0,"col":0,"coeff":1.0}}]}}"#,
        CAVITY
    ))
    .unwrap();
    // pure squeezed input with N = sinh^2 r, |M| = sqrt(N (N + 1))
    let n: f64 = 0.1687174731524223;
    let m = (n * (n + 1.0)).sqrt();
    let cov = CString::new(format!(r#"{{"N": [[{}]], "M": [[{}]]}}"#, n, m)).unwrap();
    let want = 16.0 * n * (n + 1.0) / (1.3 * 1.3);
    let mut time = 0.0;
    let mut freq = 0.0;
    let mut vac = f64::NAN;
    unsafe {
        assert_eq!(qls_qfi_rate(fam.as_ptr(), cov.as_ptr(), 0.0, 0, &mut time), QlsStatus::Ok, "{}", last_error());
        assert_eq!(qls_qfi_rate(fam.as_ptr(), cov.as_ptr(), 0.0, 1, &mut freq), QlsStatus::Ok, "{}", last_error());
        assert_eq!(qls_qfi_rate(fam.as_ptr(), ptr::null(), 0.0, 0, &mut vac), QlsStatus::Ok);
        assert_eq!(qls_qfi_rate(fam.as_ptr(), cov.as_ptr(), 0.0, 7, &mut freq), QlsStatus::InvalidInput);
    }
    assert!((time - want).abs() < 1e-8 * want, "{} {}", time, want);
    assert!((freq - want).abs() < 1e-6 * want, "{} {}", freq, want);
    assert!(vac.abs() < 1e-12);
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qls.h")).unwrap();
    for f in [
        "qls_last_error",
        "qls_system_from_json",
        "qls_system_free",
        "qls_system_to_json",
        "qls_string_free",
        "qls_system_dims",
        "qls_system_is_hurwitz",
        "qls_transfer_function",
        "qls_power_spectrum",
        "qls_absorber",
        "qls_qfi_rate",
    ] {
        assert!(h.contains(&format!("{}(", f)), "missing {}", f);
    }
}
