//! Invariant suites behind `check-bessel`, `symbols` and `check-geometry`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{CurveConfig, SurfaceSpec};
use crate::grid::{gauss_legendre, SurfaceGrid};
use crate::kernels::check_geometric_inequalities;
use crate::specfun::{bessel_i_scaled, bessel_ik_product, bessel_k, bessel_k_scaled_seq, bessel_ratio_i1i0, bessel_ratio_k1k0};
use crate::spectral::{logspace, symbol_m_eps_inv};

pub const WRONSKIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BesselSuite {
    /// `max |z(I_{j+1}K_j + I_jK_{j+1}) − 1|`, `j ≤ 16`, `z ∈ [1e-4, 600]`.
    pub wronskian_max: f64,
    /// `max |K_{ν+1} − K_{ν−1} − (2ν/z)K_ν| / K_{ν+1}`.
    pub recurrence_max: f64,
    /// `sup z²|K₁/K₀ − 1 − 1/(2z)|` on `[1, 1e4]`.
    pub k_ratio_high: f64,
    /// `inf` and `sup` of `zK₁/K₀·|log z|` on `[1e-8, 1/2]`.
    pub k_ratio_low: (f64, f64),
    /// `sup z²|I₁/I₀ − 1 + 1/(2z)|` on `[1, 1e4]`.
    pub i_ratio_high: f64,
    /// `sup |I₁/I₀ − z/2|/z³` on `[1e-4, 1)`.
    pub i_ratio_low: f64,
    pub pass: bool,
}

pub fn bessel_suite() -> Result<BesselSuite> {
    let mut wronskian_max: f64 = 0.0;
    let mut recurrence_max: f64 = 0.0;
    for z in logspace(1e-4, 600.0, 200) {
        let ks = bessel_k_scaled_seq(17, z)?;
        for j in 0..=16u32 {
            let w = z * (bessel_i_scaled(j + 1, z)? * ks[j as usize] + bessel_i_scaled(j, z)? * ks[j as usize + 1]);
            wronskian_max = wronskian_max.max((w - 1.0).abs());
        }
        for nu in 1..16usize {
            let r = ks[nu + 1] - ks[nu - 1] - 2.0 * nu as f64 / z * ks[nu];
            recurrence_max = recurrence_max.max(r.abs() / ks[nu + 1]);
        }
    }
    let high = logspace(1.0, 1e4, 400);
    let mut k_ratio_high: f64 = 0.0;
    let mut i_ratio_high: f64 = 0.0;
    for &z in &high {
        k_ratio_high = k_ratio_high.max(z * z * (bessel_ratio_k1k0(z)? - 1.0 - 0.5 / z).abs());
        i_ratio_high = i_ratio_high.max(z * z * (bessel_ratio_i1i0(z)? - 1.0 + 0.5 / z).abs());
    }
    let mut k_ratio_low = (f64::INFINITY, 0.0f64);
    for z in logspace(1e-8, 0.5, 400) {
        let q = z * bessel_ratio_k1k0(z)? * z.ln().abs();
        k_ratio_low = (k_ratio_low.0.min(q), k_ratio_low.1.max(q));
    }
    let mut i_ratio_low: f64 = 0.0;
    for z in logspace(1e-4, 0.99, 400) {
        i_ratio_low = i_ratio_low.max((bessel_ratio_i1i0(z)? - 0.5 * z).abs() / (z * z * z));
    }
    let finite = [k_ratio_high, k_ratio_low.0, k_ratio_low.1, i_ratio_high, i_ratio_low].iter().all(|c| c.is_finite());
    Ok(BesselSuite {
        wronskian_max,
        recurrence_max,
        k_ratio_high,
        k_ratio_low,
        i_ratio_high,
        i_ratio_low,
        pass: wronskian_max <= WRONSKIAN_TOL && finite && k_ratio_low.0 > 0.0,
    })
}

/// `∫₀^{2π} g(θ) K₀(z sin(θ/2)) dθ` with Gauss-Legendre panels graded
/// geometrically toward the logarithmic endpoint singularities.
pub fn k0_sine_quadrature(z: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let (x, w) = gauss_legendre(24);
    let mut acc = 0.0;
    // θ = 2t on [0, π/2] and θ = 2π − 2t
    let mut b = PI / 2.0;
    for _ in 0..80 {
        let a = 0.5 * b;
        for (xi, wi) in x.iter().zip(&w) {
            let t = a + 0.5 * (b - a) * (xi + 1.0);
            let k = bessel_k(0, z * t.sin())?;
            acc += wi * 0.5 * (b - a) * 2.0 * k * (g(2.0 * t) + g(2.0 * PI - 2.0 * t));
        }
        b = a;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolSuite {
    /// `max |quad − 2π I_ℓ(z/2)K_ℓ(z/2)| / |2π I_ℓK_ℓ|`, `z ∈ {0.2, 2, 20}`, `ℓ ≤ 8`.
    pub bessel_cos_max: f64,
    /// `max |∫ sin(ℓθ)K₀(z sin(θ/2))dθ|`.
    pub bessel_sin_max: f64,
    /// Violations of `4π²ε|k| ≤ m_ε⁻¹(k) ≤ 4π²ε|k| + 2π`, `k ≤ 1e4`.
    pub growth_violations: usize,
    pub growth_checked: usize,
    pub pass: bool,
}

pub fn symbol_suite() -> Result<SymbolSuite> {
    let mut bessel_cos_max: f64 = 0.0;
    let mut bessel_sin_max: f64 = 0.0;
    for z in [0.2, 2.0, 20.0] {
        for l in 0..=8u32 {
            let q = k0_sine_quadrature(z, |t| (l as f64 * t).cos())?;
            let exact = 2.0 * PI * bessel_ik_product(l, 0.5 * z)?;
            bessel_cos_max = bessel_cos_max.max((q - exact).abs() / exact.abs());
            if l > 0 {
                bessel_sin_max = bessel_sin_max.max(k0_sine_quadrature(z, |t| (l as f64 * t).sin())?.abs());
            }
        }
    }
    let mut growth_violations = 0;
    let mut growth_checked = 0;
    for eps in [1e-3, 1e-2, 1e-1] {
        for k in 1..=10_000i64 {
            let m = symbol_m_eps_inv(eps, k)?;
            let lin = 4.0 * PI * PI * eps * k as f64;
            growth_checked += 1;
            if !(lin <= m && m <= lin + 2.0 * PI) {
                growth_violations += 1;
            }
        }
    }
    Ok(SymbolSuite {
        bessel_cos_max,
        bessel_sin_max,
        growth_violations,
        growth_checked,
        pass: bessel_cos_max <= 1e-8 && bessel_sin_max <= 1e-10 && growth_violations == 0,
    })
}

pub const GEOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct GeometrySuite {
    pub curve: CurveConfig,
    pub epsilon: f64,
    pub closure_defect: f64,
    pub orthonormality_defect: f64,
    pub unit_speed_defect: f64,
    pub kappa3: f64,
    pub flat2cyl1_violations: usize,
    pub n_s: usize,
    pub n_theta: usize,
    pub pass: bool,
}

pub fn geometry_suite(curve: &CurveConfig, epsilon: f64, n_s: usize, n_theta: usize) -> Result<GeometrySuite> {
    let spec = SurfaceSpec::from_config(curve, epsilon)?;
    let closure_defect = spec.frame.closure_defect;
    let orthonormality_defect = spec.frame.orthonormality_defect();
    let unit_speed_defect = spec.centerline.unit_speed_defect(4096);
    let kappa3 = spec.frame.kappa3;
    let grid = SurfaceGrid::new(spec, n_s, n_theta)?;
    let rep = check_geometric_inequalities(&grid);
    let pass = closure_defect <= GEOMETRY_TOL
        && orthonormality_defect <= GEOMETRY_TOL
        && unit_speed_defect <= GEOMETRY_TOL
        && kappa3.abs() <= PI
        && rep.flat2cyl1_violations == 0;
    Ok(GeometrySuite {
        curve: curve.clone(),
        epsilon,
        closure_defect,
        orthonormality_defect,
        unit_speed_defect,
        kappa3,
        flat2cyl1_violations: rep.flat2cyl1_violations,
        n_s,
        n_theta,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_quadrature_integrates_log() {
        // ∫₀^{2π} K₀ at z → 0 behaves like −log(z sin(θ/2)/2) − γ; check the
        // z-independent part ∫ −log sin(θ/2) dθ = 2π log 2 via a difference
        let z = 1e-6;
        let a = k0_sine_quadrature(z, |_| 1.0).unwrap();
        let expect = 2.0 * PI * (-(0.5 * z).ln() - 0.577_215_664_901_532_9 + 2f64.ln());
        assert!((a - expect).abs() < 1e-9, "{a} {expect}");
    }
}
