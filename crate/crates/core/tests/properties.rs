//! Property-based invariants of the special functions, symbols and grid tools.

use std::f64::consts::PI;

use proptest::prelude::*;
use slenderlap::analysis::fit_line;
use slenderlap::grid::c0alpha_norm;
use slenderlap::specfun::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled_seq};
use slenderlap::spectral::{symbol_m_d, symbol_m_eps, symbol_m_eps_inv, symbol_m_s, symbol_m_s_inv, DataSpec, Fft2, GridFunction};

fn log_z() -> impl Strategy<Value = f64> {
    (-4.0f64..2.3).prop_map(|e| 10f64.powf(e))
}

fn eps() -> impl Strategy<Value = f64> {
    (-3.0f64..-0.7).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn bessel_positive_and_monotone(n in 0u32..12, z in log_z(), f in 1.01f64..3.0) {
        let (i1, i2) = (bessel_i(n, z).unwrap(), bessel_i(n, z * f).unwrap());
        let (k1, k2) = (bessel_k(n, z).unwrap(), bessel_k(n, z * f).unwrap());
        prop_assert!(i1 > 0.0 && k1 > 0.0);
        prop_assert!(i2 > i1);
        prop_assert!(k2 < k1);
    }

    #[test]
    fn wronskian(j in 0u32..=16, z in log_z()) {
        let ks = bessel_k_scaled_seq(j + 1, z).unwrap();
        let w = z * (bessel_i_scaled(j + 1, z).unwrap() * ks[j as usize] + bessel_i_scaled(j, z).unwrap() * ks[j as usize + 1]);
        prop_assert!((w - 1.0).abs() <= 1e-12, "{}", w - 1.0);
    }

    #[test]
    fn symbols_even(e in eps(), k in -5000i64..5000, l in -12i64..12) {
        prop_assume!(k != 0);
        let s = symbol_m_s(e, k, l).unwrap();
        prop_assert_eq!(s, symbol_m_s(e, -k, l).unwrap());
        prop_assert_eq!(s, symbol_m_s(e, k, -l).unwrap());
        let d = symbol_m_d(e, k, l).unwrap();
        prop_assert_eq!(d, symbol_m_d(e, -k, -l).unwrap());
        prop_assert_eq!(symbol_m_eps_inv(e, k).unwrap(), symbol_m_eps_inv(e, -k).unwrap());
    }

    #[test]
    fn symbol_reciprocity(e in eps(), k in 1i64..20000) {
        let r = symbol_m_eps(e, k).unwrap() * symbol_m_eps_inv(e, k).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-14);
        let q = symbol_m_s_inv(e, k).unwrap() * symbol_m_s(e, k, 0).unwrap();
        prop_assert!((q - 1.0).abs() < 1e-14);
    }

    #[test]
    fn growth_sandwich(e in eps(), k in 1i64..10000) {
        let m = symbol_m_eps_inv(e, k).unwrap();
        let lin = 4.0 * PI * PI * e * k as f64;
        prop_assert!(lin <= m && m <= lin + 2.0 * PI);
    }

    #[test]
    fn symbol_ranges(e in eps(), k in 1i64..5000, l in 0i64..12) {
        prop_assert!(symbol_m_s(e, k, l).unwrap() > 0.0);
        let d = symbol_m_d(e, k, l).unwrap();
        prop_assert!(d.abs() <= 0.5 + 1e-15, "{}", d);
    }

    #[test]
    fn fft_round_trip(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let fft = Fft2::new(16, 4);
        let back = fft.inverse_real(fft.forward(&values));
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval(values in prop::collection::vec(-10.0f64..10.0, 32)) {
        let fft = Fft2::new(32, 1);
        let c = fft.forward(&values);
        let lhs: f64 = values.iter().map(|v| v * v).sum::<f64>() / 32.0;
        let rhs: f64 = c.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn holder_norm_homogeneous(a in -5.0f64..5.0, k in 1u32..6, e in eps()) {
        let f = GridFunction::from_fn(32, 4, |s, t| (2.0 * PI * k as f64 * s).cos() + t.sin());
        let n1 = c0alpha_norm(&f, 0.25, e);
        let n2 = c0alpha_norm(&f.scaled(a), 0.25, e);
        prop_assert!((n2 - a.abs() * n1).abs() <= 1e-12 * n1);
    }

    #[test]
    fn slope_fit_exact_on_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (5..9).map(|j| (2f64.powi(-j)).ln()).collect();
        let y: Vec<f64> = x.iter().map(|x| c.ln() + p * x).collect();
        let (slope, _, res) = fit_line(&x, &y);
        prop_assert!((slope - p).abs() < 1e-10);
        prop_assert!(res.abs() < 1e-10);
    }

    #[test]
    fn data_spec_modes(k in 1u32..30, ns in 6usize..9) {
        let n = 1usize << ns;
        let g: DataSpec = format!("cos:{k}").parse().unwrap();
        let v = g.to_grid(n).unwrap();
        prop_assert_eq!(v.values.len(), n);
        prop_assert!((v.values[0] - 1.0).abs() < 1e-15);
        let r: DataSpec = format!("random:{k}").parse().unwrap();
        let w = r.to_grid(n).unwrap();
        prop_assert!(w.values.iter().sum::<f64>().abs() < 1e-12);
        prop_assert_eq!(&w, &r.to_grid(n).unwrap());
    }
}

#[test]
fn undefined_modes_are_errors() {
    assert!(symbol_m_s(0.1, 0, 0).is_err());
    assert!(symbol_m_eps(0.1, 0).is_err());
    assert!(symbol_m_s_inv(0.1, 0).is_err());
    assert_eq!(symbol_m_eps_inv(0.1, 0).unwrap(), 0.0);
}

#[test]
fn data_spec_rejects_bad_input() {
    assert!("tan:3".parse::<DataSpec>().is_err());
    assert!("cos:x".parse::<DataSpec>().is_err());
    assert!("cos:40".parse::<DataSpec>().unwrap().to_grid(64).is_err());
    assert!("[1, 2, 3]".parse::<DataSpec>().unwrap().to_grid(4).is_err());
}
