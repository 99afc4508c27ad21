use std::ffi::{c_char, CStr};
use std::ptr;

use slenderlap_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        slp_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn system(backend: SlpBackend) -> *mut SlpSystem {
    let mut sys = ptr::null_mut();
    let st = unsafe { slp_system_new(c"circle".as_ptr(), 1.0 / 32.0, 64, 8, backend, &mut sys) };
    assert_eq!(st, SlpStatus::Ok, "{}", last_error());
    assert!(!sys.is_null());
    sys
}

#[test]
fn dtn_ntd_round_trip() {
    for backend in [SlpBackend::Direct, SlpBackend::Split] {
        let sys = system(backend);
        let (mut ns, mut nt, mut cond) = (0usize, 0usize, 0.0f64);
        assert_eq!(unsafe { slp_system_info(sys, &mut ns, &mut nt, &mut cond) }, SlpStatus::Ok);
        assert_eq!((ns, nt), (64, 8));
        assert!(cond > 1.0 && cond.is_finite());
        let v: Vec<f64> = (0..ns).map(|i| (2.0 * std::f64::consts::PI * i as f64 / ns as f64).cos()).collect();
        let mut f = vec![0.0; ns];
        let mut back = vec![0.0; ns];
        unsafe {
            assert_eq!(slp_dtn(sys, v.as_ptr(), ns, f.as_mut_ptr()), SlpStatus::Ok);
            assert_eq!(slp_ntd(sys, f.as_ptr(), ns, back.as_mut_ptr()), SlpStatus::Ok);
            slp_system_free(sys);
        }
        let err = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{backend:?}: {err}");
    }
}

#[test]
fn dtn_matches_symbol_on_circle_cosine() {
    // on the circle a single s-mode is an eigenfunction up to the geometric
    // remainder, so the leading behaviour follows m_eps_inv
    let sys = system(SlpBackend::Split);
    let n = 64;
    let v: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let mut f = vec![0.0; n];
    let mut m = 0.0;
    unsafe {
        assert_eq!(slp_dtn(sys, v.as_ptr(), n, f.as_mut_ptr()), SlpStatus::Ok);
        assert_eq!(slp_symbol(0, 1.0 / 32.0, 1, 0, &mut m), SlpStatus::Ok);
        slp_system_free(sys);
    }
    let ratio = f[0] / m;
    assert!((ratio - 1.0).abs() < 0.5, "{ratio}");
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(slp_system_new(ptr::null(), 0.6, 64, 8, SlpBackend::Direct, &mut out), SlpStatus::Geometry);
        assert!(out.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(slp_system_new(c"{not json".as_ptr(), 0.01, 64, 8, SlpBackend::Direct, &mut out), SlpStatus::InvalidArgument);
        assert_eq!(slp_system_new(ptr::null(), 0.01, 64, 8, SlpBackend::Direct, ptr::null_mut()), SlpStatus::NullPointer);
        assert_eq!(last_error(), "null pointer: out");

        let sys = system(SlpBackend::Direct);
        let v = vec![1.0; 32];
        let mut f = vec![0.0; 32];
        assert_eq!(slp_dtn(sys, v.as_ptr(), 32, f.as_mut_ptr()), SlpStatus::Dimension);
        assert_eq!(slp_dtn(ptr::null(), v.as_ptr(), 32, f.as_mut_ptr()), SlpStatus::NullPointer);
        slp_system_free(sys);
        slp_system_free(ptr::null_mut());

        let mut x = 0.0;
        assert_eq!(slp_bessel(1, 0, -1.0, &mut x), SlpStatus::Domain);
        assert_eq!(slp_symbol(9, 0.1, 1, 0, &mut x), SlpStatus::InvalidArgument);
        assert_eq!(slp_bessel(0, 1, 1.0, &mut x), SlpStatus::Ok);
        assert!(last_error().is_empty());
    }
}

#[test]
fn bessel_matches_series() {
    // I_1(1) = Σ (1/2)^{2m+1} / (m!(m+1)!)
    let mut s = 0.0;
    let mut fact = 1.0;
    for m in 0..20 {
        if m > 0 {
            fact *= m as f64;
        }
        s += 0.5f64.powi(2 * m + 1) / (fact * fact * (m as f64 + 1.0));
    }
    let mut x = 0.0;
    assert_eq!(unsafe { slp_bessel(0, 1, 1.0, &mut x) }, SlpStatus::Ok);
    assert!((x - s).abs() < 1e-15, "{x} {s}");
}

#[test]
fn truncated_error_buffer() {
    let mut out = ptr::null_mut();
    unsafe {
        slp_system_new(ptr::null(), 0.6, 64, 8, SlpBackend::Direct, &mut out);
        let full = slp_last_error_message(ptr::null_mut(), 0);
        let mut buf = [0 as c_char; 4];
        assert_eq!(slp_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 3);
    }
}

#[test]
fn header_declares_entry_points() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/slenderlap.h")).unwrap();
    for name in ["slp_system_new", "slp_system_free", "slp_system_info", "slp_dtn", "slp_ntd", "slp_symbol", "slp_bessel", "slp_last_error_message", "slp_version", "SLP_STATUS_OK"] {
        assert!(h.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(slp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
