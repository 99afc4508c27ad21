//! Slender-body Dirichlet-to-Neumann and Neumann-to-Dirichlet maps, the
//! exterior Dirichlet solve, and the Green's identity residual.

use std::f64::consts::PI;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{add, dot, norm, scale, sub, CurveConfig, SurfaceSpec, V3};
use crate::grid::SurfaceGrid;
use crate::operators::{dprime_off_surface, Backend, OperatorContext};
use crate::spectral::{apply_straight_operator, FourierSymbol, GridFunction, SymbolKind};

/// Solves above this 1-norm condition estimate are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Run dense factorizations single-threaded; assembly parallelism stays with rayon.
pub fn sequential_dense_algebra() {
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Dense LU factorization with its 1-norm condition estimate.
pub struct Factorized {
    lu: PartialPivLu<f64>,
    pub n: usize,
    pub condition: f64,
}

impl Factorized {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        let norm1 = (0..n).map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        let lu = a.partial_piv_lu();
        let mut f = Factorized { lu, n, condition: f64::INFINITY };
        let inv = f.inverse_norm1_estimate();
        if !inv.is_finite() {
            return Err(Error::Singular);
        }
        f.condition = norm1 * inv;
        Ok(f)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.condition <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned(self.condition));
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Hager's estimate of `‖A⁻¹‖₁`.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let new = y.iter().map(|v| v.abs()).sum::<f64>();
            if !new.is_finite() {
                return f64::INFINITY;
            }
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_t(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if new <= est || zmax <= ztx {
                est = est.max(new);
                break;
            }
            est = new;
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        est
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Conditioning {
    pub system: String,
    pub condition_estimate: f64,
    pub unknowns: usize,
}

#[derive(Debug, Clone)]
pub struct SlenderSolveResult {
    /// Dirichlet data on the `s`-circle.
    pub v: GridFunction,
    /// Full Neumann density `w = −∂u/∂n` on the surface.
    pub w: GridFunction,
    /// `f(s) = ∫ w J dθ`.
    pub f: GridFunction,
    pub residual: f64,
    pub conditioning: Conditioning,
}

/// `f(s) = Σ_j w(s,θ_j) J(s,θ_j) 2π/n_θ`.
pub fn integrate_neumann(grid: &SurfaceGrid, w: &GridFunction) -> GridFunction {
    let wj = GridFunction { values: w.values.iter().zip(&grid.nodes).map(|(a, n)| a * n.jacobian).collect(), ..w.clone() };
    wj.theta_integral()
}

fn residual_sup(a: &Mat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        let mut acc = -b[i];
        for j in 0..n {
            acc += a[(i, j)] * x[j];
        }
        r = r.max(acc.abs());
    }
    r / b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300)
}

/// The dense slender-body system on one grid, factorized once.
pub struct SlenderSystem {
    pub ctx: OperatorContext,
    pub backend: Backend,
    s_mat: Mat<f64>,
    s_lu: Factorized,
    half_minus_d: Mat<f64>,
}

impl SlenderSystem {
    pub fn new(ctx: OperatorContext, backend: Backend) -> Result<Self> {
        let s_mat = ctx.assemble_s(backend)?.to_dense()?;
        let s_lu = Factorized::new(&s_mat)?;
        s_lu.check()?;
        let half_minus_d = ctx.half_minus_d(backend)?.to_dense()?;
        Ok(SlenderSystem { ctx, backend, s_mat, s_lu, half_minus_d })
    }

    pub fn grid(&self) -> &SurfaceGrid {
        &self.ctx.grid
    }

    pub fn condition(&self) -> f64 {
        self.s_lu.condition
    }

    /// Solve `S_h w = (½I − D_h) v` for arbitrary surface data `v`.
    pub fn full_dtn(&self, v_surface: &GridFunction) -> (GridFunction, f64) {
        let n = self.s_lu.n;
        let rhs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.half_minus_d[(i, j)] * v_surface.values[j]).sum()).collect();
        let w = self.s_lu.solve(&rhs);
        let res = residual_sup(&self.s_mat, &w, &rhs);
        (GridFunction { values: w, ..v_surface.clone() }, res)
    }

    /// Slender-body DtN map `v(s) ↦ f(s)`.
    pub fn dtn(&self, v: &GridFunction) -> Result<SlenderSolveResult> {
        let g = self.grid();
        if !v.is_s_only() || v.n_s != g.n_s {
            return Err(Error::Dimension(format!("Dirichlet data must be an s-function with {} nodes", g.n_s)));
        }
        let vs = v.extend_theta(g.n_theta);
        let (w, residual) = self.full_dtn(&vs);
        let f = integrate_neumann(g, &w);
        Ok(SlenderSolveResult {
            v: v.clone(),
            w,
            f,
            residual,
            conditioning: Conditioning {
                system: format!("S_h [{:?}]", self.backend),
                condition_estimate: self.s_lu.condition,
                unknowns: g.len(),
            },
        })
    }

    /// Slender-body NtD map `f(s) ↦ v(s)` through the square augmented system
    /// in `(w, v)`.
    pub fn ntd(&self, f: &GridFunction) -> Result<SlenderSolveResult> {
        let g = self.grid();
        if !f.is_s_only() || f.n_s != g.n_s {
            return Err(Error::Dimension(format!("Neumann data must be an s-function with {} nodes", g.n_s)));
        }
        let (n, ns, nt) = (g.len(), g.n_s, g.n_theta);
        let m = n + ns;
        let dth = 2.0 * PI / nt as f64;
        let a = Mat::from_fn(m, m, |i, j| {
            if i < n {
                if j < n {
                    self.s_mat[(i, j)]
                } else {
                    let is = j - n;
                    -(0..nt).map(|t| self.half_minus_d[(i, is * nt + t)]).sum::<f64>()
                }
            } else if j < n && j / nt == i - n {
                g.nodes[j].jacobian * dth
            } else {
                0.0
            }
        });
        let lu = Factorized::new(&a)?;
        lu.check()?;
        let mut b = vec![0.0; m];
        b[n..].copy_from_slice(&f.values);
        let x = lu.solve(&b);
        let residual = residual_sup(&a, &x, &b);
        Ok(SlenderSolveResult {
            v: GridFunction { n_s: ns, n_theta: 1, values: x[n..].to_vec() },
            w: GridFunction { n_s: ns, n_theta: nt, values: x[..n].to_vec() },
            f: f.clone(),
            residual,
            conditioning: Conditioning {
                system: format!("augmented NtD [{:?}]", self.backend),
                condition_estimate: lu.condition,
                unknowns: m,
            },
        })
    }

    /// `R_d[v] = L_ε⁻¹[v] − L̄_ε⁻¹[v]`.
    pub fn dtn_remainder(&self, v: &GridFunction) -> Result<GridFunction> {
        let eps = self.grid().epsilon();
        let mut r = self.dtn(v)?.f;
        let straight = apply_straight_operator(&FourierSymbol::new(SymbolKind::MEpsInv, eps), v, false)?;
        r.axpy(-1.0, &straight);
        Ok(r)
    }

    /// NtD map by the fixed-point iteration `v ← L̄_ε[f − R_d v]` on the
    /// zero-mean part, with the mean fixed by `⟨R_d v⟩ = ⟨f⟩`.
    pub fn ntd_neumann_series(&self, f: &GridFunction, tol: f64, max_iter: usize) -> Result<NeumannSeries> {
        let g = self.grid();
        let eps = g.epsilon();
        let m_eps = FourierSymbol::new(SymbolKind::MEps, eps);
        let mean = |x: &GridFunction| x.values.iter().sum::<f64>() / x.values.len() as f64;
        let one = GridFunction::on_s(g.n_s, |_| 1.0);
        let rd_one = mean(&self.dtn_remainder(&one)?);
        let f_mean = mean(f);
        let f0 = f.project_zero_s_mean();
        let mut v = apply_straight_operator(&m_eps, &f0, true)?;
        let mut history = Vec::new();
        for _ in 0..max_iter {
            let rd = self.dtn_remainder(&v)?;
            let mut rhs = f0.clone();
            rhs.axpy(-1.0, &rd.project_zero_s_mean());
            let mut next = apply_straight_operator(&m_eps, &rhs, true)?;
            // mean fixed so that ⟨R_d[v]⟩ = ⟨f⟩, using linearity of R_d
            let rd0 = mean(&self.dtn_remainder(&next)?);
            let c = (f_mean - rd0) / rd_one;
            next.values.iter_mut().for_each(|x| *x += c);
            let mut diff = next.clone();
            diff.axpy(-1.0, &v);
            let step = diff.sup_norm() / next.sup_norm().max(1e-300);
            history.push(step);
            v = next;
            if step < tol {
                break;
            }
        }
        let contraction = if history.len() >= 3 {
            let k = history.len();
            (history[k - 1] / history[k - 3]).sqrt()
        } else {
            f64::NAN
        };
        Ok(NeumannSeries { v, steps: history, contraction })
    }
}

#[derive(Debug, Clone)]
pub struct NeumannSeries {
    pub v: GridFunction,
    /// Relative update size per iteration.
    pub steps: Vec<f64>,
    /// Geometric-mean contraction factor over the last two iterations.
    pub contraction: f64,
}

pub fn solve_dtn(grid: SurfaceGrid, v: &GridFunction, backend: Backend) -> Result<SlenderSolveResult> {
    SlenderSystem::new(OperatorContext::new(grid), backend)?.dtn(v)
}

pub fn solve_ntd(grid: SurfaceGrid, f: &GridFunction, backend: Backend) -> Result<SlenderSolveResult> {
    SlenderSystem::new(OperatorContext::new(grid), backend)?.ntd(f)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExteriorSolution {
    pub values: Vec<f64>,
    pub density_residual: f64,
    pub condition_estimate: f64,
}

/// Solve `(½I + D'_h)φ = v` and evaluate `u = D'[φ]` at exterior points.
pub fn solve_exterior_dirichlet(
    ctx: &OperatorContext,
    v_surface: &GridFunction,
    points: &[V3],
    backend: Backend,
) -> Result<ExteriorSolution> {
    let g = &ctx.grid;
    let eps = g.epsilon();
    for p in points {
        let d = g.distance_to_centerline(*p);
        if d <= eps {
            return Err(Error::Domain(format!("evaluation point {p:?} is not exterior (distance {d:.3e} to centerline)")));
        }
        if d - eps <= 2.0 * eps {
            return Err(Error::Domain(format!("evaluation point {p:?} within 2ε of the surface")));
        }
    }
    let a = ctx.exterior_dirichlet_operator(backend)?.to_dense()?;
    let lu = Factorized::new(&a)?;
    lu.check()?;
    let phi = lu.solve(&v_surface.values);
    let density_residual = residual_sup(&a, &phi, &v_surface.values);
    let phi = GridFunction { values: phi, ..v_surface.clone() };
    Ok(ExteriorSolution { values: dprime_off_surface(g, &phi, points), density_residual, condition_estimate: lu.condition })
}

/// Point charges on the centerline: `(s, q)`.
#[derive(Debug, Clone, Serialize)]
pub struct PointCharges(pub Vec<(f64, f64)>);

impl PointCharges {
    pub fn unit_at_zero() -> Self {
        PointCharges(vec![(0.0, 1.0)])
    }

    pub fn positions(&self, spec: &SurfaceSpec) -> Vec<(V3, f64)> {
        self.0.iter().map(|(s, q)| (spec.centerline.position(*s), *q)).collect()
    }

    pub fn potential(&self, spec: &SurfaceSpec, x: V3) -> f64 {
        self.positions(spec).iter().map(|(y, q)| q / (4.0 * PI * norm(sub(x, *y)))).sum()
    }

    /// Surface traces `v = u` and `w = −∂u/∂n`.
    pub fn traces(&self, grid: &SurfaceGrid) -> (GridFunction, GridFunction) {
        let ys = self.positions(&grid.spec);
        let v = grid.sample(|n| ys.iter().map(|(y, q)| q / (4.0 * PI * norm(sub(n.x, *y)))).sum());
        let w = grid.sample(|n| {
            ys.iter()
                .map(|(y, q)| {
                    let r = sub(n.x, *y);
                    let d = norm(r);
                    q * dot(r, n.normal) / (4.0 * PI * d * d * d)
                })
                .sum()
        });
        (v, w)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenLevel {
    pub n_s: usize,
    pub n_theta: usize,
    pub residual: f64,
    pub relative_residual: f64,
    /// `S_h w` at the exact Neumann data.
    #[serde(skip)]
    pub s_w: Vec<f64>,
    #[serde(skip)]
    pub half_minus_d_v: Vec<f64>,
}

/// `‖(½I − D_h)v − S_h w‖_∞` for exact point-charge data on one grid.
pub fn greens_identity_residual(ctx: &OperatorContext, charges: &PointCharges, backend: Backend) -> Result<GreenLevel> {
    let g = &ctx.grid;
    let (v, w) = charges.traces(g);
    let sw = ctx.assemble_s(backend)?.apply(&w)?;
    let dv = ctx.half_minus_d(backend)?.apply(&v)?;
    let mut r = dv.clone();
    r.axpy(-1.0, &sw);
    let residual = r.sup_norm();
    Ok(GreenLevel {
        n_s: g.n_s,
        n_theta: g.n_theta,
        residual,
        relative_residual: residual / sw.sup_norm().max(1e-300),
        s_w: sw.values,
        half_minus_d_v: dv.values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenLadder {
    pub backend: Backend,
    pub epsilon: f64,
    pub levels: Vec<GreenLevel>,
    /// `log₂(r_k / r_{k+1})` between consecutive levels.
    pub orders: Vec<f64>,
    pub min_order: f64,
}

pub fn greens_identity_ladder(
    curve: &CurveConfig,
    epsilon: f64,
    ladder: &[usize],
    n_theta: usize,
    charges: &PointCharges,
    backend: Backend,
) -> Result<GreenLadder> {
    let spec = SurfaceSpec::from_config(curve, epsilon)?;
    let mut levels = Vec::new();
    for &ns in ladder {
        let ctx = OperatorContext::new(SurfaceGrid::new(spec.clone(), ns, n_theta)?);
        levels.push(greens_identity_residual(&ctx, charges, backend)?);
    }
    let orders: Vec<f64> = levels
        .windows(2)
        .map(|w| (w[0].residual / w[1].residual).ln() / (w[1].n_s as f64 / w[0].n_s as f64).ln())
        .collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GreenLadder { backend, epsilon, levels, orders, min_order })
}

/// `n` points spread along the filament at distance `dist` from the surface.
pub fn exterior_test_points(spec: &SurfaceSpec, n: usize, dist: f64) -> Vec<V3> {
    (0..n)
        .map(|k| {
            let s = 0.03 + k as f64 / n as f64;
            let p = spec.surface_point(s, 0.7 * k as f64);
            let c = spec.centerline.position(s);
            let dir = sub(p.position, c);
            let r = spec.epsilon + dist * (1.0 + 0.25 * (k % 3) as f64);
            add(c, scale(r / norm(dir), dir))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExteriorCheck {
    pub backend: Backend,
    pub points: Vec<V3>,
    pub exact: Vec<f64>,
    pub dprime_route: Vec<f64>,
    pub green_route: Vec<f64>,
    /// Errors relative to `max |u_exact|` over the points.
    pub dprime_error: f64,
    pub green_error: f64,
    pub route_difference: f64,
    pub condition_dprime: f64,
    pub condition_s: f64,
    pub pass: bool,
}

/// Exterior Dirichlet problem with point-charge data, solved by the modified
/// double layer and, independently, by the Green representation with `w`
/// from the first-kind solve.
pub fn exterior_cross_validation(
    ctx: OperatorContext,
    charges: &PointCharges,
    points: &[V3],
    backend: Backend,
    tol: f64,
) -> Result<ExteriorCheck> {
    let spec = ctx.grid.spec.clone();
    let (v, _) = charges.traces(&ctx.grid);
    let ext = solve_exterior_dirichlet(&ctx, &v, points, backend)?;
    let sys = SlenderSystem::new(ctx, backend)?;
    let (w, _) = sys.full_dtn(&v);
    let green = crate::operators::green_representation(sys.grid(), &w, &v, points);
    let exact: Vec<f64> = points.iter().map(|p| charges.potential(&spec, *p)).collect();
    let scale_u = exact.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let err = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale_u;
    let dprime_error = err(&ext.values, &exact);
    let green_error = err(&green, &exact);
    let route_difference = err(&ext.values, &green);
    Ok(ExteriorCheck {
        backend,
        points: points.to_vec(),
        exact,
        dprime_error,
        green_error,
        route_difference,
        condition_dprime: ext.condition_estimate,
        condition_s: sys.condition(),
        pass: dprime_error <= tol && green_error <= tol && route_difference <= tol,
        dprime_route: ext.values,
        green_route: green,
    })
}

/// Relative sup difference between two backends at each ladder level, the
/// larger of the `S_h w` and `(½I − D_h)v` discrepancies.
pub fn backend_agreement(a: &GreenLadder, b: &GreenLadder) -> Vec<f64> {
    let rel = |x: &[f64], y: &[f64]| {
        let d = x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        d / x.iter().fold(0.0f64, |m, p| m.max(p.abs())).max(1e-300)
    };
    a.levels
        .iter()
        .zip(&b.levels)
        .map(|(p, q)| rel(&p.s_w, &q.s_w).max(rel(&p.half_minus_d_v, &q.half_minus_d_v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_charges_zero_residual() {
        let spec = SurfaceSpec::from_config(&CurveConfig::circle(), 1.0 / 64.0).unwrap();
        let ctx = OperatorContext::new(SurfaceGrid::new(spec, 16, 8).unwrap());
        let r = greens_identity_residual(&ctx, &PointCharges(vec![]), Backend::Direct).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let a = Mat::from_fn(4, 4, |i, j| if i == j { [1.0, 2.0, 4.0, 1e-3][i] } else { 0.0 });
        let f = Factorized::new(&a).unwrap();
        assert!((f.condition - 4e3).abs() < 1e-6);
    }
}
