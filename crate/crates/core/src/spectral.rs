//! Fourier transforms on the `(s, θ)` torus and the straight-cylinder
//! operators as diagonal multipliers.
//!
//! Convention: `f̂(k, ℓ) = (1/(n_s n_θ)) Σ f(s_i, θ_j) e^{-2πiks_i} e^{-iℓθ_j}`
//! with modes `k ∈ {-n_s/2, …, n_s/2-1}` (same in `ℓ`). All symbols are even,
//! so the Nyquist mode is unambiguous.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{
    bessel_i_scaled, bessel_ik_product, bessel_k_scaled_seq, bessel_ratio_k1k0, expint_imag,
};

/// Samples on the `(s, θ)` grid, stored `s`-major (`index = i*n_theta + j`).
/// Functions on the `s`-circle alone have `n_theta == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub n_s: usize,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(n_s: usize, n_theta: usize) -> Self {
        GridFunction { n_s, n_theta, values: vec![0.0; n_s * n_theta] }
    }

    pub fn from_fn(n_s: usize, n_theta: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_s * n_theta);
        for i in 0..n_s {
            for j in 0..n_theta {
                values.push(f(i as f64 / n_s as f64, 2.0 * PI * j as f64 / n_theta as f64));
            }
        }
        GridFunction { n_s, n_theta, values }
    }

    pub fn on_s(n_s: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(n_s, 1, |s, _| f(s))
    }

    pub fn is_s_only(&self) -> bool {
        self.n_theta == 1
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta + j]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&mut self, a: f64, other: &GridFunction) {
        assert_eq!(self.values.len(), other.values.len());
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| a * v).collect(), ..self.clone() }
    }

    /// Extend an `s`-function to the surface grid, constant in `θ`.
    pub fn extend_theta(&self, n_theta: usize) -> GridFunction {
        assert!(self.is_s_only());
        GridFunction::from_fn(self.n_s, n_theta, |s, _| self.values[(s * self.n_s as f64).round() as usize % self.n_s])
    }

    /// Mean over `s` at each `θ` node.
    pub fn s_mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_theta];
        for i in 0..self.n_s {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += self.at(i, j);
            }
        }
        m.iter().map(|v| v / self.n_s as f64).collect()
    }

    /// `P₀`: subtract the `s`-mean at every `θ`.
    pub fn project_zero_s_mean(&self) -> GridFunction {
        let m = self.s_mean();
        let mut out = self.clone();
        for i in 0..self.n_s {
            for j in 0..self.n_theta {
                out.values[i * self.n_theta + j] -= m[j];
            }
        }
        out
    }

    /// Trapezoid `∫₀^{2π} f dθ` at every `s` node.
    pub fn theta_integral(&self) -> GridFunction {
        let w = 2.0 * PI / self.n_theta as f64;
        GridFunction::on_s(self.n_s, |_| 0.0).with_values(
            (0..self.n_s).map(|i| (0..self.n_theta).map(|j| self.at(i, j)).sum::<f64>() * w).collect(),
        )
    }

    fn with_values(mut self, values: Vec<f64>) -> Self {
        self.values = values;
        self
    }

    /// Spectral `∂_s`.
    pub fn ds(&self) -> GridFunction {
        let fft = Fft2::new(self.n_s, self.n_theta);
        let mut c = fft.forward(&self.values);
        for i in 0..self.n_s {
            let k = mode_index(i, self.n_s);
            let fac = if 2 * k.unsigned_abs() as usize == self.n_s { 0.0 } else { 2.0 * PI * k as f64 };
            for j in 0..self.n_theta {
                c[i * self.n_theta + j] *= Complex64::new(0.0, fac);
            }
        }
        GridFunction { values: fft.inverse_real(c), ..self.clone() }
    }
}

/// Signed mode number of FFT index `i` for length `n`.
#[inline]
pub fn mode_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Cached forward/inverse 2D transforms.
#[derive(Clone)]
pub struct Fft2 {
    n_s: usize,
    n_theta: usize,
    fs: Arc<dyn Fft<f64>>,
    is: Arc<dyn Fft<f64>>,
    ft: Arc<dyn Fft<f64>>,
    it: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n_s: usize, n_theta: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            n_s,
            n_theta,
            fs: p.plan_fft_forward(n_s),
            is: p.plan_fft_inverse(n_s),
            ft: p.plan_fft_forward(n_theta),
            it: p.plan_fft_inverse(n_theta),
        }
    }

    fn run(&self, data: &mut [Complex64], forward: bool) {
        let (ps, pt) = if forward { (&self.fs, &self.ft) } else { (&self.is, &self.it) };
        if self.n_theta > 1 {
            for row in data.chunks_mut(self.n_theta) {
                pt.process(row);
            }
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.n_s];
        for j in 0..self.n_theta {
            for i in 0..self.n_s {
                col[i] = data[i * self.n_theta + j];
            }
            ps.process(&mut col);
            for i in 0..self.n_s {
                data[i * self.n_theta + j] = col[i];
            }
        }
    }

    /// Normalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = (self.n_s * self.n_theta) as f64;
        let mut d: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.run(&mut d, true);
        d.iter_mut().for_each(|c| *c /= n);
        d
    }

    pub fn forward_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = (self.n_s * self.n_theta) as f64;
        let mut d = values.to_vec();
        self.run(&mut d, true);
        d.iter_mut().for_each(|c| *c /= n);
        d
    }

    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        self.run(&mut coeffs, false);
        coeffs
    }

    pub fn inverse_real(&self, coeffs: Vec<Complex64>) -> Vec<f64> {
        self.inverse(coeffs).into_iter().map(|c| c.re).collect()
    }
}

/// The straight-cylinder symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolKind {
    /// `m_ε⁻¹`, the straight Dirichlet-to-Neumann map.
    MEpsInv,
    /// `m_ε`, the straight Neumann-to-Dirichlet map.
    MEps,
    /// `m_S`, single layer.
    MS,
    /// `m_D`, double layer.
    MD,
    /// `m_S⁻¹` on `θ`-independent functions.
    MSInv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierSymbol {
    pub kind: SymbolKind,
    pub epsilon: f64,
}

impl FourierSymbol {
    pub fn new(kind: SymbolKind, epsilon: f64) -> Self {
        FourierSymbol { kind, epsilon }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SymbolKind::MEpsInv => "m_eps_inv",
            SymbolKind::MEps => "m_eps",
            SymbolKind::MS => "m_S",
            SymbolKind::MD => "m_D",
            SymbolKind::MSInv => "m_S_inv",
        }
    }

    pub fn evaluate(&self, k: i64, l: i64) -> Result<f64> {
        let e = self.epsilon;
        match self.kind {
            SymbolKind::MEpsInv => symbol_m_eps_inv(e, k),
            SymbolKind::MEps => symbol_m_eps(e, k),
            SymbolKind::MS => symbol_m_s(e, k, l),
            SymbolKind::MD => symbol_m_d(e, k, l),
            SymbolKind::MSInv => symbol_m_s_inv(e, k),
        }
    }

    /// Whether the symbol acts on `θ`-independent data only.
    pub fn is_s_only(&self) -> bool {
        matches!(self.kind, SymbolKind::MEpsInv | SymbolKind::MEps | SymbolKind::MSInv)
    }
}

fn arg(epsilon: f64, k: f64) -> f64 {
    2.0 * PI * epsilon * k.abs()
}

/// `m_ε⁻¹(k) = 4π²ε|k| K₁/K₀(2πε|k|)`, zero at `k = 0`.
pub fn symbol_m_eps_inv(epsilon: f64, k: i64) -> Result<f64> {
    m_eps_inv_real(epsilon, k as f64)
}

pub fn m_eps_inv_real(epsilon: f64, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    let z = arg(epsilon, xi);
    Ok(2.0 * PI * z * bessel_ratio_k1k0(z)?)
}

/// `m_ε = 1/m_ε⁻¹`, undefined at `k = 0`.
pub fn symbol_m_eps(epsilon: f64, k: i64) -> Result<f64> {
    if k == 0 {
        return Err(Error::UndefinedMode { k, l: 0 });
    }
    Ok(1.0 / symbol_m_eps_inv(epsilon, k)?)
}

/// `m_S(k, ℓ) = ε I_|ℓ| K_|ℓ|(2πε|k|)`; `ε/(2|ℓ|)` at `k = 0`.
pub fn symbol_m_s(epsilon: f64, k: i64, l: i64) -> Result<f64> {
    let l = l.unsigned_abs() as u32;
    if k == 0 {
        if l == 0 {
            return Err(Error::UndefinedMode { k: 0, l: 0 });
        }
        return Ok(epsilon / (2.0 * l as f64));
    }
    Ok(epsilon * bessel_ik_product(l, arg(epsilon, k as f64))?)
}

pub fn m_s_real(epsilon: f64, xi: f64, l: u32) -> Result<f64> {
    Ok(epsilon * bessel_ik_product(l, arg(epsilon, xi))?)
}

/// `m_S⁻¹(k) = 1/m_S(k, 0)`, undefined at `k = 0`.
pub fn symbol_m_s_inv(epsilon: f64, k: i64) -> Result<f64> {
    if k == 0 {
        return Err(Error::UndefinedMode { k: 0, l: 0 });
    }
    Ok(1.0 / symbol_m_s(epsilon, k, 0)?)
}

/// Double layer symbol. With `z = 2πε|k|`:
/// `ℓ = 0`: `½ − z I₀(z) K₁(z)`;
/// `ℓ ≠ 0`: `½ − (z/2) I_ℓ(z) (K_{ℓ−1} + K_{ℓ+1})(z)`.
/// Limits at `k = 0`: `−½` for `ℓ = 0`, `0` otherwise.
pub fn symbol_m_d(epsilon: f64, k: i64, l: i64) -> Result<f64> {
    let l = l.unsigned_abs() as u32;
    if k == 0 {
        return Ok(if l == 0 { -0.5 } else { 0.0 });
    }
    m_d_real(epsilon, k as f64, l)
}

pub fn m_d_real(epsilon: f64, xi: f64, l: u32) -> Result<f64> {
    let z = arg(epsilon, xi);
    let ks = bessel_k_scaled_seq(l + 1, z)?;
    let i = bessel_i_scaled(l, z)?;
    if l == 0 {
        Ok(0.5 - z * i * ks[1])
    } else {
        Ok(0.5 - 0.5 * z * i * (ks[l as usize - 1] + ks[l as usize + 1]))
    }
}

/// Multiply by a symbol in Fourier space.
pub fn apply_straight_operator(
    symbol: &FourierSymbol,
    f: &GridFunction,
    project_zero_s_mean: bool,
) -> Result<GridFunction> {
    let fft = Fft2::new(f.n_s, f.n_theta);
    let mut c = fft.forward(&f.values);
    let scale = f.sup_norm().max(1e-300);
    for i in 0..f.n_s {
        let k = mode_index(i, f.n_s);
        for j in 0..f.n_theta {
            let l = if f.n_theta == 1 { 0 } else { mode_index(j, f.n_theta) };
            let idx = i * f.n_theta + j;
            if k == 0 && project_zero_s_mean {
                c[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            match symbol.evaluate(k, l) {
                Ok(m) => c[idx] *= m,
                Err(Error::UndefinedMode { .. }) if c[idx].norm() <= 1e-13 * scale => {
                    c[idx] = Complex64::new(0.0, 0.0)
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(GridFunction { values: fft.inverse_real(c), ..f.clone() })
}

/// Multiply by a precomputed mode table (FFT ordering, same shape as `f`).
pub fn apply_table(table: &[f64], f: &GridFunction, fft: &Fft2) -> GridFunction {
    let mut c = fft.forward(&f.values);
    for (ci, m) in c.iter_mut().zip(table) {
        *ci *= *m;
    }
    GridFunction { values: fft.inverse_real(c), ..f.clone() }
}

/// Convolution kernel of a mode table: `c[d] = (1/N) Σ_k m_k e^{ik·d}`,
/// so the dense operator has entries `c[(i−i') mod n_s, (j−j') mod n_θ]`.
pub fn table_kernel(table: &[f64], n_s: usize, n_theta: usize) -> Vec<f64> {
    let fft = Fft2::new(n_s, n_theta);
    let n = (n_s * n_theta) as f64;
    let c: Vec<Complex64> = table.iter().map(|m| Complex64::new(*m, 0.0)).collect();
    fft.inverse(c).into_iter().map(|v| v.re / n).collect()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Symbols of the straight kernels truncated to `|ŝ| ≤ 1/2`, i.e. the
/// straight operators on the periodic torus with the far field cut off.
#[derive(Debug, Clone)]
pub struct TruncatedSymbols {
    pub epsilon: f64,
    pub n_s: usize,
    pub n_theta: usize,
    /// Truncated single layer, FFT ordering.
    pub p_s: Vec<f64>,
    /// Truncated double layer, FFT ordering.
    pub p_d: Vec<f64>,
    /// Infinite-cylinder `m_S` with the `(0,0)` entry set to zero.
    pub m_s: Vec<f64>,
    pub m_d: Vec<f64>,
}

impl TruncatedSymbols {
    pub fn new(epsilon: f64, n_s: usize, n_theta: usize) -> Result<Self> {
        let ks = n_s / 2 + 1;
        let ls = n_theta / 2 + 1;
        let (s0, d0) = zero_mode_truncated(epsilon, ls);
        let mut ps_u = vec![0.0; ks * ls];
        let mut pd_u = vec![0.0; ks * ls];
        let mut ms_u = vec![0.0; ks * ls];
        let mut md_u = vec![0.0; ks * ls];
        for l in 0..ls {
            ps_u[l] = s0[l];
            pd_u[l] = d0[l];
            ms_u[l] = if l == 0 { 0.0 } else { symbol_m_s(epsilon, 0, l as i64)? };
            md_u[l] = symbol_m_d(epsilon, 0, l as i64)?;
        }
        for k in 1..ks {
            let bn = TailMoments::new(epsilon, k as u32)?;
            for l in 0..ls {
                let ms = symbol_m_s(epsilon, k as i64, l as i64)?;
                let md = symbol_m_d(epsilon, k as i64, l as i64)?;
                let (ts, td) = bn.tails(l as u32);
                ms_u[k * ls + l] = ms;
                md_u[k * ls + l] = md;
                ps_u[k * ls + l] = ms - ts;
                pd_u[k * ls + l] = md - td;
            }
        }
        let expand = |u: &[f64]| {
            let mut out = vec![0.0; n_s * n_theta];
            for i in 0..n_s {
                let k = mode_index(i, n_s).unsigned_abs() as usize;
                for j in 0..n_theta {
                    let l = if n_theta == 1 { 0 } else { mode_index(j, n_theta).unsigned_abs() as usize };
                    out[i * n_theta + j] = u[k * ls + l];
                }
            }
            out
        };
        Ok(TruncatedSymbols {
            epsilon,
            n_s,
            n_theta,
            p_s: expand(&ps_u),
            p_d: expand(&pd_u),
            m_s: expand(&ms_u),
            m_d: expand(&md_u),
        })
    }
}

/// `p_S(0, ℓ)` and `p_D(0, ℓ)` for `ℓ = 0..ls`.
fn zero_mode_truncated(epsilon: f64, ls: usize) -> (Vec<f64>, Vec<f64>) {
    let m = 4096usize.max(8 * ls);
    let fft = Fft2::new(m, 1);
    let mut smooth = Vec::with_capacity(m);
    let mut dk = Vec::with_capacity(m);
    for j in 0..m {
        let th = 2.0 * PI * j as f64 / m as f64;
        let a = 2.0 * epsilon * (0.5 * th).sin().abs();
        smooth.push(2.0 * (1.0 + (1.0 + 4.0 * a * a).sqrt()).ln());
        dk.push(1.0 / (0.25 + a * a).sqrt());
    }
    // forward() is normalized by 1/m, so ∫ f e^{-iℓθ} dθ = 2π·f̂(ℓ)
    let cs = fft.forward(&smooth);
    let cd = fft.forward(&dk);
    let four_pi = 4.0 * PI;
    let mut s0 = Vec::with_capacity(ls);
    let mut d0 = Vec::with_capacity(ls);
    for l in 0..ls {
        // 2 asinh(1/(2a)) = 2 ln(1+√(1+4a²)) − 2 ln(4ε) − 2 ln|sin(θ/2)|
        let log_part = if l == 0 {
            -4.0 * PI * (4.0 * epsilon).ln() + 4.0 * PI * 2f64.ln()
        } else {
            2.0 * PI / l as f64
        };
        s0.push(epsilon / four_pi * (2.0 * PI * cs[l].re + log_part));
        d0.push(-(2.0 * PI * cd[l].re) / (2.0 * four_pi));
    }
    (s0, d0)
}

/// Moments `B_n(k) = 2∫_{1/2}^∞ cos(2πkŝ) ŝ^{-2n-1} dŝ` for one `k ≠ 0`.
struct TailMoments {
    epsilon: f64,
    b: Vec<f64>,
}

const TAIL_TERMS: u32 = 48;

impl TailMoments {
    fn new(epsilon: f64, k: u32) -> Result<Self> {
        let x = PI * k as f64;
        let mut b = Vec::with_capacity(TAIL_TERMS as usize + 2);
        for n in 0..TAIL_TERMS + 2 {
            let p = 2 * n + 1;
            b.push(2f64.powi(p as i32) * expint_imag(p, x)?.re);
        }
        Ok(TailMoments { epsilon, b })
    }

    /// Contributions of `|ŝ| > 1/2` to `m_S(k,ℓ)` and `m_D(k,ℓ)`.
    fn tails(&self, l: u32) -> (f64, f64) {
        let e2 = self.epsilon * self.epsilon;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        // T_n(ℓ) = ∫ a^{2n} e^{-iℓθ} dθ = 2π(−1)^ℓ ε^{2n} C(2n, n+ℓ), zero for n < ℓ
        let t = |n: u32| 2.0 * PI * sign * e2.powi(n as i32) * binomial(2 * n, n + l);
        // binom(−½, n) = (−1)^n C(2n,n)/4^n, binom(−3/2, n) = (2n+1)·binom(−½, n)
        let c = |n: u32| {
            let sg = if n % 2 == 0 { 1.0 } else { -1.0 };
            sg * binomial(2 * n, n) / 4f64.powi(n as i32)
        };
        let sum = |first: u32, term: &dyn Fn(u32) -> f64| {
            let mut acc = 0.0;
            for n in first..TAIL_TERMS {
                let v = term(n);
                acc += v;
                if n > first + 2 && v.abs() <= 1e-18 * acc.abs() {
                    break;
                }
            }
            acc
        };
        let ts = sum(l, &|n| c(n) * t(n) * self.b[n as usize]);
        let td = sum(l.saturating_sub(1), &|n| c(n) * (2 * n + 1) as f64 * t(n + 1) * self.b[n as usize + 1]);
        (self.epsilon / (4.0 * PI) * ts, -td / (8.0 * PI))
    }
}

/// One envelope comparison of the multiplier bounds.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCheck {
    pub symbol: String,
    pub regime: String,
    pub derivative: u32,
    pub envelope: String,
    /// Sup over the sampled `ξ` of `|∂^ℓ m| / envelope`.
    pub sup_ratio: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolBoundsReport {
    pub epsilon: f64,
    pub checks: Vec<EnvelopeCheck>,
}

impl SymbolBoundsReport {
    pub fn all_finite(&self) -> bool {
        self.checks.iter().all(|c| c.finite)
    }
}

/// Finite-difference check of the multiplier envelopes on the real-`ξ`
/// extension of `m_S⁻¹`, `m_ε⁻¹` and `m_ε`, in both regimes `|ξ| ≷ 1/(2πε)`.
pub fn finite_diff_symbol_bounds(epsilon: f64) -> Result<SymbolBoundsReport> {
    let xi_c = 1.0 / (2.0 * PI * epsilon);
    let le = epsilon.ln().abs();
    let ms_inv = |x: f64| -> Result<f64> { Ok(1.0 / m_s_real(epsilon, x, 0)?) };
    let me_inv = |x: f64| m_eps_inv_real(epsilon, x);
    let me = |x: f64| -> Result<f64> { Ok(1.0 / m_eps_inv_real(epsilon, x)?) };
    let deriv = |f: &dyn Fn(f64) -> Result<f64>, x: f64, order: u32| -> Result<f64> {
        let h = 1e-3 * x;
        Ok(match order {
            0 => f(x)?,
            1 => (f(x + h)? - f(x - h)?) / (2.0 * h),
            _ => (f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h),
        })
    };
    let low: Vec<f64> = logspace(1.0, 0.99 * xi_c, 60);
    let high: Vec<f64> = logspace(1.01 * xi_c, 1e4 * xi_c.max(1.0), 60);
    type Env = Box<dyn Fn(f64, u32) -> f64>;
    let mut checks = Vec::new();
    let mut run = |name: &str, f: &dyn Fn(f64) -> Result<f64>, regime: &str, xs: &[f64], env: Env, env_desc: &[&str]| -> Result<()> {
        for order in 0..3u32 {
            if env_desc[order as usize].is_empty() {
                continue;
            }
            let mut sup: f64 = 0.0;
            for &x in xs {
                sup = sup.max(deriv(f, x, order)?.abs() / env(x, order));
            }
            checks.push(EnvelopeCheck {
                symbol: name.into(),
                regime: regime.into(),
                derivative: order,
                envelope: env_desc[order as usize].into(),
                sup_ratio: sup,
                finite: sup.is_finite(),
            });
        }
        Ok(())
    };
    let e = epsilon;
    run("m_S_inv", &ms_inv, "high", &high, Box::new(|x, l| x.powi(1 - l as i32)), &["|xi|", "1", "|xi|^-1"])?;
    run("m_S_inv", &ms_inv, "low", &low, Box::new(move |x, l| x.powi(-(l as i32)) / e), &["1/eps", "1/(eps|xi|)", "1/(eps|xi|^2)"])?;
    run("m_eps_inv", &me_inv, "high", &high, Box::new(move |x, l| e * x.powi(1 - l as i32)), &["eps|xi|", "eps", "eps/|xi|"])?;
    run(
        "m_eps_inv",
        &me_inv,
        "low",
        &low,
        Box::new(move |x, l| if l == 0 { 1.0 / le } else { 1.0 / (x.powi(l as i32) * le * le) }),
        &["1/|log eps|", "1/(|xi| log^2 eps)", "1/(|xi|^2 log^2 eps)"],
    )?;
    run("m_eps", &me, "high", &high, Box::new(move |x, l| 1.0 / (e * x.powi(l as i32 + 1))), &["1/(eps|xi|)", "1/(eps|xi|^2)", "1/(eps|xi|^3)"])?;
    run(
        "m_eps",
        &me,
        "low",
        &low,
        Box::new(move |x, l| if l == 0 { le } else { x.powi(-(l as i32)) }),
        &["|log eps|", "1/|xi|", "1/|xi|^2"],
    )?;
    Ok(SymbolBoundsReport { epsilon, checks })
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Boundary data on the `s`-circle: `cos:k`, `sin:k`, `random:SEED`
/// (zero-mean, modes `1..=8`, coefficients decaying like `1/k²`) or a JSON
/// array of nodal values.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Cos(u32),
    Sin(u32),
    Random(u64),
    Values(Vec<f64>),
}

impl std::str::FromStr for DataSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('[') {
            let v: Vec<f64> = serde_json::from_str(t)?;
            return Ok(DataSpec::Values(v));
        }
        let (kind, arg) = t.split_once(':').ok_or_else(|| Error::Config(format!("bad data spec '{s}'")))?;
        let bad = || Error::Config(format!("bad data spec '{s}'"));
        match kind {
            "cos" => Ok(DataSpec::Cos(arg.parse().map_err(|_| bad())?)),
            "sin" => Ok(DataSpec::Sin(arg.parse().map_err(|_| bad())?)),
            "random" => Ok(DataSpec::Random(arg.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl DataSpec {
    pub fn to_grid(&self, n_s: usize) -> Result<GridFunction> {
        use rand::{Rng, SeedableRng};
        let tau = 2.0 * PI;
        let check = |k: u32| {
            if 2 * k as usize >= n_s {
                Err(Error::Config(format!("mode {k} not resolved by n_s = {n_s}")))
            } else {
                Ok(())
            }
        };
        match self {
            DataSpec::Cos(k) => {
                check(*k)?;
                Ok(GridFunction::on_s(n_s, |s| (tau * *k as f64 * s).cos()))
            }
            DataSpec::Sin(k) => {
                check(*k)?;
                Ok(GridFunction::on_s(n_s, |s| (tau * *k as f64 * s).sin()))
            }
            DataSpec::Random(seed) => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let kmax = 8.min(n_s as u32 / 2 - 1);
                let coeffs: Vec<(f64, f64)> = (1..=kmax)
                    .map(|k| {
                        let d = 1.0 / (k * k) as f64;
                        (d * rng.gen_range(-1.0..1.0), d * rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                Ok(GridFunction::on_s(n_s, |s| {
                    coeffs.iter().enumerate().map(|(i, (a, b))| {
                        let x = tau * (i + 1) as f64 * s;
                        a * x.cos() + b * x.sin()
                    }).sum()
                }))
            }
            DataSpec::Values(v) => {
                if v.len() != n_s {
                    return Err(Error::Dimension(format!("{} values given, n_s = {n_s}", v.len())));
                }
                Ok(GridFunction { n_s, n_theta: 1, values: v.clone() })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_fft() {
        let f = GridFunction::from_fn(16, 8, |s, t| (2.0 * PI * s).cos() * t.sin() + 0.3 * (3.0 * t).cos() + s);
        let fft = Fft2::new(16, 8);
        let back = fft.inverse_real(fft.forward(&f.values));
        for (a, b) in back.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn m_d_limits_and_zero_mode() {
        assert_eq!(symbol_m_d(0.01, 0, 0).unwrap(), -0.5);
        assert_eq!(symbol_m_d(0.01, 0, 3).unwrap(), 0.0);
        let near = m_d_real(0.01, 1e-7, 0).unwrap();
        assert!((near + 0.5).abs() < 1e-6);
        let near = m_d_real(0.01, 1e-7, 2).unwrap();
        assert!(near.abs() < 1e-6);
    }

    #[test]
    fn ms_zero_mode_undefined() {
        assert!(matches!(symbol_m_s(0.01, 0, 0), Err(Error::UndefinedMode { .. })));
        assert!((symbol_m_s(0.01, 0, 4).unwrap() - 0.01 / 8.0).abs() < 1e-16);
    }

    fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    // Direct quadrature of the truncated straight kernels: ŝ = a·sinh(u) removes
    // the near-singularity, θ̂ = πt² grades the log singularity at θ̂ = 0.
    fn truncated_oracle(eps: f64, k: i64, l: i64) -> (f64, f64) {
        let inner = |a: f64, w: &dyn Fn(f64) -> f64| {
            let u_max = (0.5 / a).asinh();
            simpson(2000, -u_max, u_max, |u| (2.0 * PI * k as f64 * a * u.sinh()).cos() * w(u))
        };
        let outer = |w: &dyn Fn(f64) -> f64| {
            2.0 * simpson(1000, 0.0, 1.0, |t| {
                if t == 0.0 {
                    return 0.0;
                }
                let th = PI * t * t;
                let a = 2.0 * eps * (0.5 * th).sin();
                (l as f64 * th).cos() * inner(a, w) * 2.0 * PI * t
            })
        };
        let s = eps / (4.0 * PI) * outer(&|_| 1.0);
        let d = -outer(&|u: f64| 1.0 / (u.cosh() * u.cosh())) / (8.0 * PI);
        (s, d)
    }

    #[test]
    fn truncated_symbols_match_direct_quadrature() {
        let eps = 1.0 / 16.0;
        let tab = TruncatedSymbols::new(eps, 16, 8).unwrap();
        for &(k, l) in &[(0i64, 0i64), (0, 2), (1, 0), (3, 1), (5, 2), (2, 3), (8, 4)] {
            let i = k.rem_euclid(16) as usize;
            let j = l.rem_euclid(8) as usize;
            let (os, od) = truncated_oracle(eps, k, l);
            let (ps, pd) = (tab.p_s[i * 8 + j], tab.p_d[i * 8 + j]);
            assert!((ps - os).abs() < 1e-7, "p_S({k},{l}) {ps} vs {os}");
            assert!((pd - od).abs() < 1e-7, "p_D({k},{l}) {pd} vs {od}");
        }
    }
}

