//! Modified Bessel functions of integer order and real argument, plus the
//! generalized exponential integral on the imaginary axis used by the
//! truncated straight-cylinder symbols.
//!
//! Small arguments use ascending series. For `z > 2` the pair `K_0, K_1`
//! comes from Steed's continued fraction and `I_n` from the ratio
//! `I_{n+1}/I_n` combined with the Wronskian, so everything is available in
//! exponentially scaled form.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 64;
pub const MAX_ARG: f64 = 700.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 2.0;

/// One evaluation of the pair `(I_n(z), K_n(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    pub value_i: f64,
    pub value_k: f64,
}

impl BesselEval {
    pub fn new(order: u32, z: f64) -> Result<Self> {
        Ok(BesselEval {
            order,
            argument: z,
            value_i: bessel_i(order, z)?,
            value_k: bessel_k(order, z)?,
        })
    }
}

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {n} exceeds cap {MAX_ORDER}")));
    }
    Ok(())
}

fn check_domain(z: f64, allow_zero: bool) -> Result<()> {
    if !z.is_finite() || z < 0.0 || (!allow_zero && z == 0.0) {
        return Err(Error::Domain(format!("Bessel argument {z} outside domain")));
    }
    Ok(())
}

fn check_arg(z: f64, allow_zero: bool) -> Result<()> {
    check_domain(z, allow_zero)?;
    if z > MAX_ARG {
        return Err(Error::Overflow { order: 0, z });
    }
    Ok(())
}

fn with_order(e: Error, order: u32) -> Error {
    match e {
        Error::Overflow { z, .. } => Error::Overflow { order, z },
        e => e,
    }
}

/// Ascending series for `I_n(z)`, all terms positive.
fn i_series(n: u32, z: f64) -> f64 {
    let h = 0.5 * z;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = h * h;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `K_0`, `K_1` by series, valid for `0 < z <= 2`.
fn k01_series(z: f64) -> (f64, f64) {
    let h = 0.5 * z;
    let q = h * h;
    let lg = h.ln() + EULER_GAMMA;
    // K_0 = -(ln(z/2)+γ) I_0 + Σ q^k/(k!)² H_k
    let mut t = 1.0;
    let mut harm = 0.0;
    let mut i0 = 1.0;
    let mut s0 = 0.0;
    // K_1 = 1/z + ln(z/2) I_1 - (z/4) Σ q^k (ψ(k+1)+ψ(k+2)) / (k!(k+1)!)
    let mut t1 = 1.0;
    let mut i1 = 1.0;
    let mut s1 = -2.0 * EULER_GAMMA + 1.0;
    let mut k = 1.0;
    loop {
        t *= q / (k * k);
        harm += 1.0 / k;
        i0 += t;
        s0 += t * harm;
        t1 *= q / (k * (k + 1.0));
        i1 += t1;
        s1 += t1 * (2.0 * harm - 2.0 * EULER_GAMMA + 1.0 / (k + 1.0));
        if t < 1e-18 && t1 < 1e-18 {
            break;
        }
        k += 1.0;
    }
    let k0 = -lg * i0 + s0;
    let k1 = 1.0 / z + h.ln() * h * i1 - 0.5 * h * s1;
    (k0, k1)
}

/// Scaled `K_0 e^z`, `K_1 e^z` by Steed's continued fraction, `z > 2`.
fn k01_cf_scaled(z: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..100_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

/// Scaled `K_0 e^z, K_1 e^z` for any `z > 0`.
fn k01_scaled(z: f64) -> (f64, f64) {
    if z <= SERIES_SWITCH {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        (k0 * e, k1 * e)
    } else {
        k01_cf_scaled(z)
    }
}

/// Scaled values `K_j(z) e^z` for `j = 0..=n_max` by upward recurrence.
pub fn bessel_k_scaled_seq(n_max: u32, z: f64) -> Result<Vec<f64>> {
    check_order(n_max.saturating_sub(1))?;
    check_domain(z, false)?;
    let (k0, k1) = k01_scaled(z);
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(k0);
    if n_max >= 1 {
        out.push(k1);
    }
    for j in 1..n_max {
        let next = out[j as usize - 1] + 2.0 * j as f64 / z * out[j as usize];
        if !next.is_finite() {
            return Err(Error::Overflow { order: j + 1, z });
        }
        out.push(next);
    }
    Ok(out)
}

/// `K_n(z) e^z`.
pub fn bessel_k_scaled(n: u32, z: f64) -> Result<f64> {
    check_order(n)?;
    let seq = bessel_k_scaled_seq(n.max(1), z)?;
    Ok(seq[n as usize])
}

/// Ratio `I_{n+1}(z)/I_n(z)` from its continued fraction (modified Lentz).
fn i_ratio(n: u32, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..1_000_000u32 {
        let b = 2.0 * (n + k) as f64 / z;
        d = b + d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// `I_n(z) e^{-z}`; `z = 0` returns the limit.
pub fn bessel_i_scaled(n: u32, z: f64) -> Result<f64> {
    check_order(n)?;
    check_domain(z, true)?;
    if z == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if z <= SERIES_SWITCH {
        return Ok(i_series(n, z) * (-z).exp());
    }
    let ks = bessel_k_scaled_seq(n + 1, z)?;
    let r = i_ratio(n, z);
    Ok(1.0 / (z * (r * ks[n as usize] + ks[n as usize + 1])))
}

/// Modified Bessel function of the first kind `I_n(z)`.
pub fn bessel_i(n: u32, z: f64) -> Result<f64> {
    check_arg(z, true).map_err(|e| with_order(e, n))?;
    let v = bessel_i_scaled(n, z)? * z.exp();
    if !v.is_finite() {
        return Err(Error::Overflow { order: n, z });
    }
    Ok(v)
}

/// Modified Bessel function of the second kind `K_n(z)`.
pub fn bessel_k(n: u32, z: f64) -> Result<f64> {
    check_arg(z, false).map_err(|e| with_order(e, n))?;
    let v = bessel_k_scaled(n, z)? * (-z).exp();
    if !v.is_finite() {
        return Err(Error::Overflow { order: n, z });
    }
    Ok(v)
}

/// `K_1(z)/K_0(z)` without overflow; not limited by the argument cap.
pub fn bessel_ratio_k1k0(z: f64) -> Result<f64> {
    check_domain(z, false)?;
    let (k0, k1) = k01_scaled(z);
    Ok(k1 / k0)
}

/// `I_1(z)/I_0(z)`.
pub fn bessel_ratio_i1i0(z: f64) -> Result<f64> {
    check_domain(z, false)?;
    if z <= SERIES_SWITCH {
        return Ok(i_series(1, z) / i_series(0, z));
    }
    Ok(i_ratio(0, z))
}

/// Product `I_n(z) K_n(z)`, formed from the scaled factors.
pub fn bessel_ik_product(n: u32, z: f64) -> Result<f64> {
    Ok(bessel_i_scaled(n, z)? * bessel_k_scaled(n, z)?)
}

/// Generalized exponential integral `E_p(ix) = ∫_1^∞ e^{-ixt} t^{-p} dt`
/// for `p >= 1` and `|x| >= 1`, by the continued fraction.
pub fn expint_imag(p: u32, x: f64) -> Result<Complex64> {
    if p == 0 || x.abs() < 1.0 {
        return Err(Error::Domain(format!("expint_imag needs p >= 1 and |x| >= 1, got p={p}, x={x}")));
    }
    let z = Complex64::new(0.0, x);
    let nm1 = (p - 1) as f64;
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = z + p as f64;
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200_000u32 {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            return Ok(h * (-z).exp());
        }
    }
    Err(Error::NoConvergence("expint_imag continued fraction".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // K_n(z) = ∫_0^∞ exp(-z cosh t) cosh(n t) dt, trapezoid is spectrally accurate.
    fn k_integral(n: u32, z: f64) -> f64 {
        let h: f64 = 0.005;
        let mut s = 0.5 * (-z).exp();
        let mut t = h;
        loop {
            let v = (-z * t.cosh() + n as f64 * t).exp();
            if v < 1e-30 && t > 1.0 {
                break;
            }
            s += (-z * t.cosh()).exp() * (n as f64 * t).cosh();
            t += h;
        }
        s * h
    }

    // I_n(z) = (1/π) ∫_0^π exp(z cos t) cos(n t) dt
    fn i_integral(n: u32, z: f64) -> f64 {
        let m = 4000;
        let h = std::f64::consts::PI / m as f64;
        let mut s = 0.0;
        for j in 0..=m {
            let t = j as f64 * h;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * (z * t.cos()).exp() * (n as f64 * t).cos();
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn limits_at_zero() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
        assert!(bessel_k(0, 0.0).is_err());
        assert!(bessel_i(0, -1.0).is_err());
    }

    #[test]
    fn i_against_integral() {
        for &n in &[0u32, 1, 2, 5, 10] {
            for &z in &[0.1, 1.0, 1.9, 2.1, 5.0, 12.0, 30.0] {
                // the integral form cancels badly when I_n(z) << I_0(z)
                let a = bessel_i(n, z).unwrap();
                let b = i_integral(n, z);
                let scale = i_integral(0, z);
                assert!((a - b).abs() < 1e-12 * scale.max(b), "I_{n}({z}) {a} vs {b}");
            }
        }
        assert!(rel(bessel_i(1, 1.0).unwrap(), 0.565_159_103_992_485) < 1e-13);
    }

    // Independent ascending series with terms built from factorials directly.
    #[test]
    fn i_small_argument_series() {
        for &n in &[2u32, 5, 10] {
            for &z in &[0.01f64, 0.1, 0.7] {
                let mut fact_n = 1.0f64;
                for j in 1..=n {
                    fact_n *= j as f64;
                }
                let mut sum = 0.0;
                let mut fk = 1.0f64;
                let mut fnk = fact_n;
                for k in 0..30u32 {
                    if k > 0 {
                        fk *= k as f64;
                        fnk *= (n + k) as f64;
                    }
                    sum += (0.5 * z).powi((n + 2 * k) as i32) / (fk * fnk);
                }
                let a = bessel_i(n, z).unwrap();
                assert!(rel(a, sum) < 1e-13, "I_{n}({z}) {a} vs {sum}");
            }
        }
    }

    #[test]
    fn k_against_integral() {
        for &n in &[0u32, 1, 2, 3, 7] {
            for &z in &[0.05, 0.5, 1.0, 1.99, 2.01, 4.0, 10.0, 40.0] {
                let a = bessel_k(n, z).unwrap();
                let b = k_integral(n, z);
                assert!(rel(a, b) < 1e-12, "K_{n}({z}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn k0_log_behaviour() {
        let z = 1e-7;
        let k0 = bessel_k(0, z).unwrap();
        assert!((k0 + (z / 2.0).ln() + EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(bessel_k(64, 1e-8), Err(Error::Overflow { .. })));
        assert!(bessel_i(65, 1.0).is_err());
        assert!(bessel_i(0, 800.0).is_err());
    }

    #[test]
    fn expint_against_quadrature() {
        // ∫_1^T e^{-ixt} t^{-p} dt with a smooth tail estimate; p >= 3 converges absolutely.
        for &(p, x) in &[(3u32, 3.2), (5, 1.5), (9, 12.0)] {
            let e = expint_imag(p, x).unwrap();
            let m = 400_000;
            let tmax = 400.0;
            let h = (tmax - 1.0) / m as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=m {
                let t = 1.0 + j as f64 * h;
                let w = if j == 0 || j == m {
                    1.0 / 3.0
                } else if j % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                };
                acc += w * Complex64::new(0.0, -x * t).exp() * t.powi(-(p as i32));
            }
            acc *= h;
            // leading tail: e^{-ixT} T^{-p}/(ix)
            acc += Complex64::new(0.0, -x * tmax).exp() * tmax.powi(-(p as i32)) / Complex64::new(0.0, x);
            assert!((e - acc).norm() < 1e-9, "E_{p}(i{x}) {e} vs {acc}");
        }
    }
}
