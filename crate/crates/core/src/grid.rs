//! Tensor grids on the filament surface, trapezoid and punctured rules,
//! lattice constants for the diagonal correction, and discrete Hölder norms.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{scale, sub, SurfaceSpec, V3};
use crate::spectral::GridFunction;

/// Cached surface data at one node.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceNode {
    pub s: f64,
    pub theta: f64,
    pub x: V3,
    /// Outward unit normal, equal to `e_r(s, θ)`.
    pub normal: V3,
    pub jacobian: f64,
    pub kappa_hat: f64,
}

#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub spec: SurfaceSpec,
    pub n_s: usize,
    pub n_theta: usize,
    pub nodes: Vec<SurfaceNode>,
    /// Centerline positions `X(s_i)`.
    pub center: Vec<V3>,
    /// Unit tangents `e_t(s_i)`.
    pub tangent: Vec<V3>,
}

fn check_pow2(name: &str, n: usize, min: usize) -> Result<()> {
    if !n.is_power_of_two() || n < min {
        return Err(Error::Config(format!("{name} must be a power of two ≥ {min}, got {n}")));
    }
    Ok(())
}

impl SurfaceGrid {
    pub fn new(spec: SurfaceSpec, n_s: usize, n_theta: usize) -> Result<Self> {
        check_pow2("n_s", n_s, 4)?;
        check_pow2("n_theta", n_theta, 4)?;
        let mut nodes = Vec::with_capacity(n_s * n_theta);
        let mut center = Vec::with_capacity(n_s);
        let mut tangent = Vec::with_capacity(n_s);
        for i in 0..n_s {
            let s = i as f64 / n_s as f64;
            let p = spec.centerline.point(s);
            center.push(p.x);
            tangent.push(p.tangent);
            for j in 0..n_theta {
                let theta = 2.0 * PI * j as f64 / n_theta as f64;
                let sp = spec.surface_point(s, theta);
                nodes.push(SurfaceNode {
                    s,
                    theta,
                    x: sp.position,
                    normal: sp.normal,
                    jacobian: sp.jacobian,
                    kappa_hat: sp.kappa_hat,
                });
            }
        }
        Ok(SurfaceGrid { spec, n_s, n_theta, nodes, center, tangent })
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weight per node in `(s, θ)`.
    pub fn weight(&self) -> f64 {
        (1.0 / self.n_s as f64) * (2.0 * PI / self.n_theta as f64)
    }

    #[inline]
    pub fn s_index(&self, node: usize) -> usize {
        node / self.n_theta
    }

    #[inline]
    pub fn theta_index(&self, node: usize) -> usize {
        node % self.n_theta
    }

    /// Periodic representative of `s_i − s_j` in `[−1/2, 1/2]`, ties to `+1/2`.
    #[inline]
    pub fn s_hat(&self, i: usize, j: usize) -> f64 {
        let n = self.n_s as i64;
        let mut d = (i as i64 - j as i64).rem_euclid(n);
        if 2 * d > n {
            d -= n;
        }
        d as f64 / n as f64
    }

    /// Periodic representative of `θ_i − θ_j` in `[−π, π]`, ties to `+π`.
    #[inline]
    pub fn theta_hat(&self, i: usize, j: usize) -> f64 {
        let n = self.n_theta as i64;
        let mut d = (i as i64 - j as i64).rem_euclid(n);
        if 2 * d > n {
            d -= n;
        }
        2.0 * PI * d as f64 / n as f64
    }

    /// `e_r` at a node.
    #[inline]
    pub fn e_r(&self, node: usize) -> V3 {
        self.nodes[node].normal
    }

    pub fn jacobians(&self) -> GridFunction {
        GridFunction { n_s: self.n_s, n_theta: self.n_theta, values: self.nodes.iter().map(|n| n.jacobian).collect() }
    }

    pub fn kappa_hats(&self) -> GridFunction {
        GridFunction { n_s: self.n_s, n_theta: self.n_theta, values: self.nodes.iter().map(|n| n.kappa_hat).collect() }
    }

    /// Sample `f(x)` at the surface nodes.
    pub fn sample(&self, f: impl Fn(&SurfaceNode) -> f64) -> GridFunction {
        GridFunction { n_s: self.n_s, n_theta: self.n_theta, values: self.nodes.iter().map(f).collect() }
    }

    /// Trapezoid `∫∫ f J dθ ds`-style sum with the given per-node factor.
    pub fn integrate(&self, f: &GridFunction) -> f64 {
        f.values.iter().sum::<f64>() * self.weight()
    }

    /// Distance from a point to the centerline, sampled at the `s` nodes and
    /// refined by golden-section search.
    pub fn distance_to_centerline(&self, p: V3) -> f64 {
        let d = |s: f64| crate::geometry::norm(sub(p, self.spec.centerline.position(s)));
        let (mut best, mut bs) = (f64::INFINITY, 0.0);
        for (i, c) in self.center.iter().enumerate() {
            let v = crate::geometry::norm(sub(p, *c));
            if v < best {
                best = v;
                bs = i as f64 / self.n_s as f64;
            }
        }
        let h = 1.0 / self.n_s as f64;
        let (mut a, mut b) = (bs - h, bs + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let e = a + g * (b - a);
            if d(c) < d(e) {
                b = e;
            } else {
                a = c;
            }
        }
        best.min(d(0.5 * (a + b)))
    }
}

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Lattice constants `ζ[f] = lim (punctured lattice sum − integral)` over
/// growing boxes, for kernels homogeneous of degree −1 on the lattice
/// `h₁ℤ × h₂ℤ`. The punctured trapezoid of `f·ψ` plus `−ζ[f]·ψ(0)`
/// approximates the weakly singular integral to higher order.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LatticeZeta {
    /// `ζ[1/r]`.
    pub z_r: f64,
    /// `ζ[y²/r³]`.
    pub z_y2: f64,
    /// `ζ[s²/r³] = z_r − z_y2`.
    pub z_s2: f64,
    /// `ζ[s²y²/r⁵]`.
    pub z_s2y2: f64,
}

impl LatticeZeta {
    pub fn new(h1: f64, h2: f64) -> Self {
        let f_r = |a: f64, b: f64| 1.0 / a.hypot(b);
        let f_y2 = |a: f64, b: f64| {
            let r = a.hypot(b);
            b * b / (r * r * r)
        };
        let f_s2y2 = |a: f64, b: f64| {
            let r2 = a * a + b * b;
            a * a * b * b / (r2 * r2 * r2.sqrt())
        };
        let z_r = zeta_richardson(&f_r, h1, h2);
        let z_y2 = zeta_richardson(&f_y2, h1, h2);
        let z_s2y2 = zeta_richardson(&f_s2y2, h1, h2);
        LatticeZeta { z_r, z_y2, z_s2: z_r - z_y2, z_s2y2 }
    }

    /// Constants for a surface grid in the flat coordinates `(ŝ, εθ̂)`.
    pub fn for_grid(grid: &SurfaceGrid) -> Self {
        Self::new(1.0 / grid.n_s as f64, grid.epsilon() * 2.0 * PI / grid.n_theta as f64)
    }
}

const ZETA_BOX: usize = 64;

fn zeta_richardson(f: &(dyn Fn(f64, f64) -> f64 + Sync), h1: f64, h2: f64) -> f64 {
    lattice_zeta(f, 1.0, h1, h2)
}

/// `ζ[f]` for `f` homogeneous of degree `−p`, `0 < p < 2`. The box truncation
/// error decays like `M^{−p}` and is removed by one Richardson step.
pub fn lattice_zeta(f: &(dyn Fn(f64, f64) -> f64 + Sync), p: f64, h1: f64, h2: f64) -> f64 {
    let r = 2f64.powf(p);
    (r * zeta_box(f, p, h1, h2, 2 * ZETA_BOX) - zeta_box(f, p, h1, h2, ZETA_BOX)) / (r - 1.0)
}

fn zeta_box(f: &(dyn Fn(f64, f64) -> f64 + Sync), p: f64, h1: f64, h2: f64, m: usize) -> f64 {
    let len = m as f64 * h1.max(h2);
    let m1 = (len / h1).round() as i64;
    let m2 = (len / h2).round() as i64;
    let sum: f64 = (-m1..=m1)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in -m2..=m2 {
                if i != 0 || j != 0 {
                    acc += f(i as f64 * h1, j as f64 * h2);
                }
            }
            acc
        })
        .sum();
    sum * h1 * h2 - box_integral(f, p, (m1 as f64 + 0.5) * h1, (m2 as f64 + 0.5) * h2)
}

/// `∫_{[−A,A]×[−B,B]} f` for `f` homogeneous of degree `−p`, in polar form
/// `∫ f(cos φ, sin φ) ρ_max(φ)^{2−p}/(2−p) dφ`, split at the corner angles.
fn box_integral(f: &dyn Fn(f64, f64) -> f64, p: f64, a: f64, b: f64) -> f64 {
    let c = b.atan2(a);
    let brk = [0.0, c, PI - c, PI, PI + c, 2.0 * PI - c, 2.0 * PI];
    let (x, w) = gauss_legendre(64);
    let mut tot = 0.0;
    for seg in brk.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let ph = 0.5 * (hi - lo) * xi + 0.5 * (hi + lo);
            let (sn, cs) = ph.sin_cos();
            let rho = (a / cs.abs().max(1e-300)).min(b / sn.abs().max(1e-300));
            tot += 0.5 * (hi - lo) * wi * f(cs, sn) * rho.powf(2.0 - p) / (2.0 - p);
        }
    }
    tot
}

/// Punctured trapezoid `Σ_{j ≠ target} K(target, j) ρ_j · w` on the surface grid.
pub fn punctured_trapezoid(
    grid: &SurfaceGrid,
    kernel: impl Fn(usize, usize) -> f64,
    density: &GridFunction,
    target: usize,
) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.len() {
        if j != target {
            acc += kernel(target, j) * density.values[j];
        }
    }
    acc * grid.weight()
}

const HOLDER_CAP: usize = 8192;

/// Discrete Hölder seminorm: max over node pairs of `|f(p) − f(q)| / d(p,q)^α`
/// with `d = √(ŝ² + ε²θ̂²)` on the surface and `d = |ŝ|` on the `s`-circle.
/// Grids above 8192 nodes are subsampled in `s`.
pub fn holder_seminorm(f: &GridFunction, alpha: f64, epsilon: f64) -> f64 {
    let mut stride = 1;
    while f.n_s / stride * f.n_theta > HOLDER_CAP {
        stride *= 2;
    }
    let ns = f.n_s / stride;
    let nt = f.n_theta;
    let n = ns * nt;
    let val = |p: usize| f.values[(p / nt) * stride * nt + p % nt];
    (0..n)
        .into_par_iter()
        .map(|p| {
            let (ip, jp) = (p / nt, p % nt);
            let fp = val(p);
            let mut best: f64 = 0.0;
            for q in p + 1..n {
                let (iq, jq) = (q / nt, q % nt);
                let mut ds = (ip as f64 - iq as f64).abs() / ns as f64;
                ds = ds.min(1.0 - ds);
                let mut dt = (jp as f64 - jq as f64).abs() * 2.0 * PI / nt as f64;
                dt = dt.min(2.0 * PI - dt);
                let d = if nt == 1 { ds } else { (ds * ds + epsilon * epsilon * dt * dt).sqrt() };
                best = best.max((fp - val(q)).abs() / d.powf(alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `‖f‖_{C^{0,α}} = ‖f‖_∞ + |f|_α`.
pub fn c0alpha_norm(f: &GridFunction, alpha: f64, epsilon: f64) -> f64 {
    f.sup_norm() + holder_seminorm(f, alpha, epsilon)
}

/// `‖f‖_∞ + ‖∂_s f‖_∞ + |∂_s f|_α` on the `s`-circle, `∂_s` spectral.
pub fn c1alpha_norm(f: &GridFunction, alpha: f64) -> f64 {
    let d = f.ds();
    f.sup_norm() + d.sup_norm() + holder_seminorm(&d, alpha, 1.0)
}

/// Vector from `X(s_i)` to the surface node, divided by `ε`.
pub fn radial(grid: &SurfaceGrid, node: usize) -> V3 {
    let i = grid.s_index(node);
    scale(1.0 / grid.epsilon(), sub(grid.nodes[node].x, grid.center[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn square_lattice_zeta() {
        // ζ[1/r] on the unit square lattice is 4ζ(1/2)β(1/2) ≈ −3.900264920
        let f = |a: f64, b: f64| 1.0 / a.hypot(b);
        let z = zeta_richardson(&f, 1.0, 1.0);
        assert!((z + 3.900264920001956).abs() < 1e-4, "{z}");
    }

    #[test]
    fn zeta_scales_with_spacing() {
        let a = LatticeZeta::new(1.0, 0.4);
        let b = LatticeZeta::new(0.01, 0.004);
        assert!((b.z_r - 0.01 * a.z_r).abs() < 1e-9);
        assert!((b.z_s2y2 - 0.01 * a.z_s2y2).abs() < 1e-9);
    }

    #[test]
    fn holder_of_cosine() {
        let f = GridFunction::on_s(256, |s| (2.0 * PI * s).cos());
        let v = holder_seminorm(&f, 1.0, 1.0);
        assert!((v / (2.0 * PI) - 1.0).abs() < 0.02);
        let c = GridFunction::on_s(64, |_| 3.0);
        assert_eq!(holder_seminorm(&c, 0.5, 1.0), 0.0);
    }
}
