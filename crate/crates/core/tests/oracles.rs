//! Special functions and symbols against independently computed references.

use std::f64::consts::PI;

use slenderlap::specfun::{bessel_i, bessel_k, bessel_ratio_k1k0};
use slenderlap::spectral::{symbol_m_d, symbol_m_eps_inv, symbol_m_s};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Ascending series for `I_n(z)`, summed smallest term first.
fn i_series(n: u32, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut lead = (0.5 * z).powi(n as i32);
    for j in 1..=n {
        lead /= j as f64;
    }
    let mut terms = vec![lead];
    let mut t = lead;
    for m in 1..200 {
        t *= q / (m as f64 * (m + n) as f64);
        terms.push(t);
        if t < 1e-40 * lead {
            break;
        }
    }
    terms.iter().rev().sum()
}

/// `K_n(z) = ∫₀^∞ exp(−z cosh t) cosh(nt) dt` by the trapezoidal rule, which
/// converges geometrically for this analytic, rapidly decaying integrand.
fn k_integral(n: u32, z: f64) -> f64 {
    let h = 1.0 / 128.0;
    let f = |t: f64| (-z * t.cosh() + n as f64 * t).exp() * 0.5 * (1.0 + (-2.0 * n as f64 * t).exp());
    let mut acc = 0.5 * f(0.0);
    let mut t = h;
    loop {
        let v = f(t);
        acc += v;
        if t > 2.0 && v < 1e-18 * acc {
            break;
        }
        t += h;
    }
    acc * h
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn i1_at_one_matches_series() {
    let s = i_series(1, 1.0);
    assert!((s - 0.565_159_1).abs() < 1e-7);
    assert!(rel(bessel_i(1, 1.0).unwrap(), s) < 1e-12);
}

#[test]
fn i_trivial_values() {
    assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
    assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
}

#[test]
fn i_matches_series_on_range() {
    for n in [0u32, 1, 2, 5, 10, 16] {
        for z in [1e-3, 0.1, 0.7, 1.0, 3.3, 10.0, 25.0] {
            let e = rel(bessel_i(n, z).unwrap(), i_series(n, z));
            assert!(e < 1e-12, "I_{n}({z}): {e}");
        }
    }
}

#[test]
fn k_matches_integral_on_range() {
    for n in [0u32, 1, 2, 5, 9] {
        for z in [1e-6, 1e-3, 0.05, 0.5, 1.0, 2.5, 10.0, 40.0] {
            let e = rel(bessel_k(n, z).unwrap(), k_integral(n, z));
            assert!(e < 1e-12, "K_{n}({z}): {e}");
        }
    }
}

#[test]
fn k1_at_ten() {
    let e = rel(bessel_k(1, 10.0).unwrap(), k_integral(1, 10.0));
    assert!(e < 1e-12, "{e}");
}

#[test]
fn k0_logarithmic_limit() {
    let mut prev = f64::INFINITY;
    for z in [1e-2, 1e-4, 1e-6, 1e-8] {
        let d = (bessel_k(0, z).unwrap() + (0.5 * z).ln() + EULER_GAMMA).abs();
        assert!(d < prev);
        prev = d;
    }
    assert!(prev < 1e-14);
}

#[test]
fn k_ratio_at_one_consistent() {
    let r = bessel_k(1, 1.0).unwrap() / bessel_k(0, 1.0).unwrap();
    assert!(rel(bessel_ratio_k1k0(1.0).unwrap(), r) < 1e-13);
}

#[test]
fn symbols_from_oracle_bessel_values() {
    for eps in [1e-3, 1.0 / 64.0, 0.2] {
        for k in [1i64, 3, 17, 200] {
            let z = 2.0 * PI * eps * k as f64;
            let (i0, i1) = (i_series(0, z), i_series(1, z));
            let (k0, k1) = (k_integral(0, z), k_integral(1, z));
            assert!(rel(symbol_m_eps_inv(eps, k).unwrap(), 2.0 * PI * z * k1 / k0) < 1e-11);
            assert!(rel(symbol_m_s(eps, k, 0).unwrap(), eps * i0 * k0) < 1e-11);
            // ½ − zI₀K₁ = zI₁K₀ − ½ by the Wronskian
            let md = symbol_m_d(eps, k, 0).unwrap();
            assert!((md - (z * i1 * k0 - 0.5)).abs() < 1e-11, "{eps} {k}");
        }
    }
}

#[test]
fn double_layer_symbol_continuous_at_zero_mode() {
    for l in 0..6i64 {
        let limit = symbol_m_d(0.1, 0, l).unwrap();
        let near = symbol_m_d(1e-7, 1, l).unwrap();
        assert!((near - limit).abs() < 1e-5, "l = {l}: {near} vs {limit}");
    }
}

#[test]
fn dtn_symbol_large_mode_asymptotics() {
    // K₁/K₀ = 1 + 1/(2z) + O(z⁻²), so m_ε⁻¹ − 4π²ε|k| → π
    let eps = 0.01;
    let k = 100_000i64;
    let m = symbol_m_eps_inv(eps, k).unwrap();
    assert!((m - 4.0 * PI * PI * eps * k as f64 - PI).abs() < 1e-3);
}
