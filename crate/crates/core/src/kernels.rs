//! Pointwise kernels on the filament surface and their straight-cylinder
//! comparisons. All kernels carry the `1/(4π)` of the Laplace fundamental
//! solution.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{add, dot, norm, scale, sub, V3};
use crate::grid::{lattice_zeta, SurfaceGrid};

const FOUR_PI: f64 = 4.0 * PI;

/// A target/source node pair with offsets `ŝ = s − s'` and `θ̂ = θ − θ'`.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub target: usize,
    pub source: usize,
    pub s_hat: f64,
    pub theta_hat: f64,
    pub epsilon: f64,
    pub x: V3,
    pub x_src: V3,
    pub normal_src: V3,
    pub tangent: V3,
    pub e_r: V3,
    pub e_r_src: V3,
    pub kappa_hat: f64,
    pub kappa_hat_src: f64,
}

impl KernelPoint {
    pub fn new(grid: &SurfaceGrid, target: usize, source: usize) -> Self {
        let (it, jt) = (grid.s_index(target), grid.theta_index(target));
        let (is, js) = (grid.s_index(source), grid.theta_index(source));
        let nt = &grid.nodes[target];
        let ns = &grid.nodes[source];
        KernelPoint {
            target,
            source,
            s_hat: grid.s_hat(it, is),
            theta_hat: grid.theta_hat(jt, js),
            epsilon: grid.epsilon(),
            x: nt.x,
            x_src: ns.x,
            normal_src: ns.normal,
            tangent: grid.tangent[it],
            e_r: nt.normal,
            e_r_src: ns.normal,
            kappa_hat: nt.kappa_hat,
            kappa_hat_src: ns.kappa_hat,
        }
    }

    fn check(&self) -> Result<()> {
        if self.target == self.source {
            return Err(Error::Domain(format!("kernel evaluated on the diagonal at node {}", self.target)));
        }
        Ok(())
    }

    /// `R = x − x'`.
    pub fn r(&self) -> V3 {
        sub(self.x, self.x_src)
    }

    /// `|R̄| = √(ŝ² + 4ε² sin²(θ̂/2))`.
    pub fn r_bar(&self) -> f64 {
        let a = 2.0 * self.epsilon * (0.5 * self.theta_hat).sin();
        (self.s_hat * self.s_hat + a * a).sqrt()
    }

    /// `√(ŝ² + ε²θ̂²)`.
    pub fn r_flat(&self) -> f64 {
        (self.s_hat * self.s_hat + (self.epsilon * self.theta_hat).powi(2)).sqrt()
    }

    /// `R_t = ŝ e_t(s) + ε(e_r(s,θ) − e_r(s−ŝ, θ−θ̂))`.
    pub fn r_t(&self) -> V3 {
        add(scale(self.s_hat, self.tangent), scale(self.epsilon, sub(self.e_r, self.e_r_src)))
    }
}

/// `G = 1/(4π|x − x'|)`.
pub fn kernel_g(p: &KernelPoint) -> Result<f64> {
    p.check()?;
    Ok(1.0 / (FOUR_PI * norm(p.r())))
}

/// `K_D = (x − x')·n_{x'} / (4π|x − x'|³)`.
pub fn kernel_kd(p: &KernelPoint) -> Result<f64> {
    p.check()?;
    let r = p.r();
    let d = norm(r);
    Ok(dot(r, p.normal_src) / (FOUR_PI * d * d * d))
}

/// Straight single layer kernel `1/(4π|R̄|)`.
pub fn kernel_g_bar(p: &KernelPoint) -> Result<f64> {
    p.check()?;
    Ok(1.0 / (FOUR_PI * p.r_bar()))
}

/// Straight double layer kernel `−2ε sin²(θ̂/2)/(4π|R̄|³)`.
pub fn kernel_kd_bar(p: &KernelPoint) -> Result<f64> {
    p.check()?;
    let rb = p.r_bar();
    let sn = (0.5 * p.theta_hat).sin();
    Ok(-2.0 * p.epsilon * sn * sn / (FOUR_PI * rb * rb * rb))
}

/// `(1/|R|, 1/|R_t|, 1/|R̄|)`.
pub fn kernel_rt_pieces(p: &KernelPoint) -> Result<(f64, f64, f64)> {
    p.check()?;
    Ok((1.0 / norm(p.r()), 1.0 / norm(p.r_t()), 1.0 / p.r_bar()))
}

/// Empirical constants of the comparisons between `R`, `R̄` and the flat
/// distance over all grid pairs.
#[derive(Debug, Clone, Serialize)]
pub struct GeometricReport {
    pub n_s: usize,
    pub n_theta: usize,
    pub epsilon: f64,
    pub kappa_star: f64,
    /// Smallest `c` with `||R| − |R̄|| ≤ (κ_*/2)ŝ² + c ε|ŝ|`.
    pub xest1_c: f64,
    /// Pairs with `ŝ = 0` where `|R| ≠ |R̄|` beyond roundoff.
    pub xest1_violations: usize,
    /// `min |R|/|R̄|`.
    pub xest2_c: f64,
    /// Pairs violating `||R̄| − √(ŝ²+ε²θ̂²)| ≤ (sinh π − π)ε|θ̂|³`.
    pub flat2cyl1_violations: usize,
    pub flat2cyl1_max_ratio: f64,
    /// `min |R̄|/√(ŝ²+ε²θ̂²)`.
    pub flat2cyl2_c: f64,
    pub worst_flat2cyl1: Option<(f64, f64)>,
    pub pass: bool,
}

#[derive(Default, Clone, Copy)]
struct GeoAcc {
    c1: f64,
    v1: usize,
    c2: f64,
    v3: usize,
    r3: f64,
    worst3: Option<(f64, f64)>,
    c4: f64,
}

/// Check the comparison inequalities on all node pairs.
pub fn check_geometric_inequalities(grid: &SurfaceGrid) -> GeometricReport {
    let eps = grid.epsilon();
    let ks = grid.spec.frame.kappa_star;
    let c_flat = PI.sinh() - PI;
    let n = grid.len();
    let init = GeoAcc { c2: f64::INFINITY, c4: f64::INFINITY, ..Default::default() };
    let acc = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut a = init;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let p = KernelPoint::new(grid, i, j);
                let r = norm(p.r());
                let rb = p.r_bar();
                let rf = p.r_flat();
                let sh = p.s_hat.abs();
                let d = (r - rb).abs();
                if sh == 0.0 {
                    if d > 1e-12 * rb {
                        a.v1 += 1;
                    }
                } else {
                    a.c1 = a.c1.max((d - 0.5 * ks * sh * sh) / (eps * sh));
                }
                a.c2 = a.c2.min(r / rb);
                let bound = c_flat * eps * p.theta_hat.abs().powi(3);
                let dev = (rb - rf).abs();
                if dev > bound {
                    a.v3 += 1;
                    a.worst3 = Some((p.s_hat, p.theta_hat));
                } else if bound > 0.0 {
                    a.r3 = a.r3.max(dev / bound);
                }
                a.c4 = a.c4.min(rb / rf);
            }
            a
        })
        .reduce(
            || init,
            |x, y| GeoAcc {
                c1: x.c1.max(y.c1),
                v1: x.v1 + y.v1,
                c2: x.c2.min(y.c2),
                v3: x.v3 + y.v3,
                r3: x.r3.max(y.r3),
                worst3: x.worst3.or(y.worst3),
                c4: x.c4.min(y.c4),
            },
        );
    let pass = acc.c1.is_finite() && acc.v1 == 0 && acc.c2 > 0.0 && acc.v3 == 0 && acc.c4 >= 0.2;
    GeometricReport {
        n_s: grid.n_s,
        n_theta: grid.n_theta,
        epsilon: eps,
        kappa_star: ks,
        xest1_c: acc.c1.max(0.0),
        xest1_violations: acc.v1,
        xest2_c: acc.c2,
        flat2cyl1_violations: acc.v3,
        flat2cyl1_max_ratio: acc.r3,
        flat2cyl2_c: acc.c4,
        worst_flat2cyl1: acc.worst3,
        pass,
    }
}

/// `|R_even|² = |R̄|² + εŝ²Q_{R,0} + 2κ₃ε²ŝ sin θ̂`, with
/// `Q_{R,0} = −2κ̂ + εκ̂² + εκ₃²` at the target.
pub fn r_even(p: &KernelPoint, kappa3: f64) -> f64 {
    let e = p.epsilon;
    let q0 = -2.0 * p.kappa_hat + e * p.kappa_hat * p.kappa_hat + e * kappa3 * kappa3;
    let rb = p.r_bar();
    (rb * rb + e * p.s_hat * p.s_hat * q0 + 2.0 * kappa3 * e * e * p.s_hat * p.theta_hat.sin()).sqrt()
}

/// Symmetric punctured sums of `ŝⁿ(ε sin(θ̂/2))^m / |R_even|^{n+m+2}` against
/// the weight `ε`, for each requested `(n, m)`. Boundary ties `ŝ = ±1/2`,
/// `θ̂ = ±π` are split evenly between both representatives.
pub fn oddness_sums(grid: &SurfaceGrid, target: usize, exponents: &[(u32, u32)]) -> Vec<f64> {
    let k3 = grid.spec.frame.kappa3;
    let eps = grid.epsilon();
    let w = grid.weight() * eps;
    let half_s = grid.n_s % 2 == 0;
    let half_t = grid.n_theta % 2 == 0;
    exponents
        .iter()
        .map(|&(n, m)| {
            let mut acc = 0.0;
            for j in 0..grid.len() {
                if j == target {
                    continue;
                }
                let base = KernelPoint::new(grid, target, j);
                let s_tie = half_s && (base.s_hat - 0.5).abs() < 1e-15;
                let t_tie = half_t && (base.theta_hat - PI).abs() < 1e-12;
                let s_reps: &[f64] = if s_tie { &[0.5, -0.5] } else { &[base.s_hat] };
                let t_reps: &[f64] = if t_tie { &[PI, -PI] } else { &[base.theta_hat] };
                let share = 1.0 / (s_reps.len() * t_reps.len()) as f64;
                for &sh in s_reps {
                    for &th in t_reps {
                        let p = KernelPoint { s_hat: sh, theta_hat: th, ..base };
                        let re = r_even(&p, k3);
                        let num = sh.powi(n as i32) * (eps * (0.5 * th).sin()).powi(m as i32);
                        acc += share * num / re.powi((n + m + 2) as i32);
                    }
                }
            }
            acc * w
        })
        .collect()
}

/// Which distance the basic integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Distance {
    Curved,
    Straight,
    Flat,
}

/// `∫∫ |R|^{−(k−α)} ε dθ̂ dŝ` at a target node, by punctured trapezoid with
/// the lattice correction for the flat model of the singularity.
pub fn basic_integral(grid: &SurfaceGrid, target: usize, k: u32, alpha: f64, dist: Distance) -> f64 {
    let p = k as f64 - alpha;
    let eps = grid.epsilon();
    let sum: f64 = (0..grid.len())
        .into_par_iter()
        .filter(|&j| j != target)
        .map(|j| {
            let kp = KernelPoint::new(grid, target, j);
            let r = match dist {
                Distance::Curved => norm(kp.r()),
                Distance::Straight => kp.r_bar(),
                Distance::Flat => kp.r_flat(),
            };
            r.powf(-p)
        })
        .sum();
    let h1 = 1.0 / grid.n_s as f64;
    let h2 = eps * 2.0 * PI / grid.n_theta as f64;
    let zeta = lattice_zeta(&|a: f64, b: f64| a.hypot(b).powf(-p), p, h1, h2);
    sum * grid.weight() * eps - zeta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveConfig, SurfaceSpec};

    fn circle_grid(eps: f64, ns: usize, nt: usize) -> SurfaceGrid {
        let spec = SurfaceSpec::from_config(&CurveConfig::circle(), eps).unwrap();
        SurfaceGrid::new(spec, ns, nt).unwrap()
    }

    #[test]
    fn straight_double_layer_identity() {
        let g = circle_grid(1.0 / 32.0, 32, 8);
        for j in [1usize, 9, 37, 100] {
            let p = KernelPoint::new(&g, 0, j);
            // R̄·n̄' = −2ε sin²(θ̂/2)
            let kd = kernel_kd_bar(&p).unwrap();
            let rb = p.r_bar();
            let s = (0.5 * p.theta_hat).sin();
            assert!((kd * FOUR_PI * rb.powi(3) + 2.0 * p.epsilon * s * s).abs() < 1e-15);
        }
        assert!(kernel_g(&KernelPoint::new(&g, 3, 3)).is_err());
    }

    #[test]
    fn g_is_symmetric() {
        let g = circle_grid(1.0 / 64.0, 32, 8);
        for (i, j) in [(0usize, 5usize), (17, 200), (64, 3)] {
            let a = kernel_g(&KernelPoint::new(&g, i, j)).unwrap();
            let b = kernel_g(&KernelPoint::new(&g, j, i)).unwrap();
            assert!((a - b).abs() < 1e-14 * a);
        }
    }

    #[test]
    fn flat_integral_matches_closed_form() {
        // ∫∫ ε/√(ŝ²+ε²θ̂²) over the box, in closed form via the box integral of 1/r
        let eps = 1.0 / 32.0;
        let g = circle_grid(eps, 64, 16);
        let v = basic_integral(&g, 0, 1, 0.0, Distance::Flat);
        let (a, b) = (0.5, PI * eps);
        let exact = 4.0 * (a * (b / a + (1.0 + (b / a).powi(2)).sqrt()).ln() + b * (a / b + (1.0 + (a / b).powi(2)).sqrt()).ln());
        assert!((v - exact).abs() < 1e-3 * exact, "{v} vs {exact}");
    }
}
