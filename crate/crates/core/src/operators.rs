//! Discrete layer operators on the filament surface.
//!
//! Every operator is a sum of parts acting on a weighted density
//! `ψ = c ⊙ φ`: a Fourier multiplier, a punctured pair kernel, a diagonal,
//! or a multiple of the identity. Parts can be applied matrix-free or
//! materialized densely.
//!
//! Backends: `Direct` sums the curved kernels by punctured trapezoid with a
//! lattice correction on the diagonal. `Split` applies the straight kernels
//! truncated to `|ŝ| ≤ 1/2` through their exact symbols and only sums the
//! curved-minus-straight differences.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{add, dot, norm, scale, sub};
use crate::grid::{LatticeZeta, SurfaceGrid};
use crate::spectral::{apply_table, mode_index, table_kernel, Fft2, GridFunction, TruncatedSymbols};

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Backend {
    Direct,
    Split,
}

/// Pair kernels summed by the trapezoid rule. Entries already include the
/// quadrature weight of the flat coordinates `(ŝ, εθ̂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKernel {
    /// `G`.
    G,
    /// `K_D`.
    Kd,
    /// `G − Ḡ` with `Ḡ` truncated to `|ŝ| ≤ 1/2`.
    GMinusGBar,
    /// `K_D − K̄_D`.
    KdMinusKdBar,
    /// `(1/|R| − 1/|R_t|)/(4π)`.
    Rs1,
    /// `(1/|R_t| − 1/|R̄|)/(4π)`.
    Rs2,
    /// `−G ε κ̂(s', θ')`.
    Rs3,
    /// `J'/|x − X(s')|`, not punctured.
    DprimeCorrection,
}

impl PairKernel {
    fn punctured(self) -> bool {
        !matches!(self, PairKernel::DprimeCorrection)
    }
}

#[derive(Clone)]
enum Body {
    Identity(f64),
    Spectral(Arc<Vec<f64>>),
    Kernel(PairKernel),
    Diagonal(Arc<Vec<f64>>),
}

#[derive(Clone)]
struct Part {
    weight: Option<Arc<Vec<f64>>>,
    body: Body,
}

/// A linear map on surface grid functions.
#[derive(Clone)]
pub struct DiscreteOperator {
    pub name: String,
    pub grid: Arc<SurfaceGrid>,
    parts: Vec<Part>,
    /// Input must have zero `s`-mean (checked on apply).
    pub zero_mean_input: bool,
}

impl std::fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperator").field("name", &self.name).field("parts", &self.parts.len()).finish()
    }
}

#[inline]
fn pair_entry(grid: &SurfaceGrid, kind: PairKernel, i: usize, j: usize) -> f64 {
    let eps = grid.epsilon();
    let w = grid.weight() * eps;
    let ni = &grid.nodes[i];
    let nj = &grid.nodes[j];
    let (it, jt) = (i / grid.n_theta, i % grid.n_theta);
    let (is, js) = (j / grid.n_theta, j % grid.n_theta);
    let r = sub(ni.x, nj.x);
    let d = norm(r);
    let bar = || {
        let sh = grid.s_hat(it, is);
        let a = 2.0 * eps * (0.5 * grid.theta_hat(jt, js)).sin();
        (sh, a, (sh * sh + a * a).sqrt())
    };
    match kind {
        PairKernel::G => w / (FOUR_PI * d),
        PairKernel::Kd => w * dot(r, nj.normal) / (FOUR_PI * d * d * d),
        PairKernel::GMinusGBar => {
            let (_, _, rb) = bar();
            w * (1.0 / d - 1.0 / rb) / FOUR_PI
        }
        PairKernel::KdMinusKdBar => {
            let (_, a, rb) = bar();
            let kd = dot(r, nj.normal) / (d * d * d);
            let kdb = -a * a / (2.0 * eps * rb * rb * rb);
            w * (kd - kdb) / FOUR_PI
        }
        PairKernel::Rs1 | PairKernel::Rs2 => {
            let sh = grid.s_hat(it, is);
            let rt = add(scale(sh, grid.tangent[it]), scale(eps, sub(ni.normal, nj.normal)));
            let drt = norm(rt);
            if kind == PairKernel::Rs1 {
                w * (1.0 / d - 1.0 / drt) / FOUR_PI
            } else {
                let (_, _, rb) = bar();
                w * (1.0 / drt - 1.0 / rb) / FOUR_PI
            }
        }
        PairKernel::Rs3 => -w * eps * nj.kappa_hat / (FOUR_PI * d),
        PairKernel::DprimeCorrection => {
            let dc = norm(sub(ni.x, grid.center[is]));
            grid.weight() * nj.jacobian / dc
        }
    }
}

impl DiscreteOperator {
    fn new(name: &str, grid: &Arc<SurfaceGrid>) -> Self {
        DiscreteOperator { name: name.into(), grid: grid.clone(), parts: Vec::new(), zero_mean_input: false }
    }

    fn with(mut self, weight: Option<&Arc<Vec<f64>>>, body: Body) -> Self {
        self.parts.push(Part { weight: weight.cloned(), body });
        self
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `a·self + b·other` on the same grid.
    pub fn combine(&self, a: f64, other: &DiscreteOperator, b: f64, name: &str) -> DiscreteOperator {
        let mut parts = Vec::new();
        for (c, op) in [(a, self), (b, other)] {
            for p in &op.parts {
                let body = match &p.body {
                    Body::Identity(v) => Body::Identity(c * v),
                    Body::Spectral(t) => Body::Spectral(Arc::new(t.iter().map(|v| c * v).collect())),
                    Body::Diagonal(t) => Body::Diagonal(Arc::new(t.iter().map(|v| c * v).collect())),
                    Body::Kernel(k) => {
                        let w: Vec<f64> = match &p.weight {
                            Some(w) => w.iter().map(|v| c * v).collect(),
                            None => vec![c; self.len()],
                        };
                        parts.push(Part { weight: Some(Arc::new(w)), body: Body::Kernel(*k) });
                        continue;
                    }
                };
                parts.push(Part { weight: p.weight.clone(), body });
            }
        }
        DiscreteOperator {
            name: name.into(),
            grid: self.grid.clone(),
            parts,
            zero_mean_input: self.zero_mean_input || other.zero_mean_input,
        }
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        let g = &self.grid;
        if phi.n_s != g.n_s || phi.n_theta != g.n_theta {
            return Err(Error::Dimension(format!(
                "operator {} expects {}×{}, got {}×{}",
                self.name, g.n_s, g.n_theta, phi.n_s, phi.n_theta
            )));
        }
        if self.zero_mean_input {
            let m = phi.s_mean().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 1e-10 * phi.sup_norm().max(1e-300) {
                return Err(Error::NonZeroMean(m));
            }
        }
        let n = g.len();
        let mut out = vec![0.0; n];
        let fft = Fft2::new(g.n_s, g.n_theta);
        for p in &self.parts {
            let psi: Vec<f64> = match &p.weight {
                Some(w) => phi.values.iter().zip(w.iter()).map(|(a, b)| a * b).collect(),
                None => phi.values.clone(),
            };
            match &p.body {
                Body::Identity(c) => out.iter_mut().zip(&psi).for_each(|(o, v)| *o += c * v),
                Body::Diagonal(d) => out.iter_mut().zip(d.iter()).zip(&psi).for_each(|((o, d), v)| *o += d * v),
                Body::Spectral(t) => {
                    let f = GridFunction { n_s: g.n_s, n_theta: g.n_theta, values: psi };
                    let r = apply_table(t, &f, &fft);
                    out.iter_mut().zip(&r.values).for_each(|(o, v)| *o += v);
                }
                Body::Kernel(k) => {
                    let k = *k;
                    let punct = k.punctured();
                    let add: Vec<f64> = (0..n)
                        .into_par_iter()
                        .map(|i| {
                            let mut acc = 0.0;
                            for (j, v) in psi.iter().enumerate() {
                                if punct && i == j {
                                    continue;
                                }
                                acc += pair_entry(g, k, i, j) * v;
                            }
                            acc
                        })
                        .collect();
                    out.iter_mut().zip(&add).for_each(|(o, v)| *o += v);
                }
            }
        }
        Ok(GridFunction { n_s: g.n_s, n_theta: g.n_theta, values: out })
    }

    /// Dense matrix, row-major by target node.
    pub fn to_dense(&self) -> Result<Mat<f64>> {
        let g = &self.grid;
        let n = g.len();
        let bytes = n * n * 8;
        if bytes > 6 << 30 {
            return Err(Error::Config(format!("dense {n}×{n} operator needs {} MiB", bytes >> 20)));
        }
        let mut rows = vec![0.0; n * n];
        for p in &self.parts {
            let wt = |j: usize| p.weight.as_ref().map_or(1.0, |w| w[j]);
            match &p.body {
                Body::Identity(c) => (0..n).for_each(|i| rows[i * n + i] += c * wt(i)),
                Body::Diagonal(d) => (0..n).for_each(|i| rows[i * n + i] += d[i] * wt(i)),
                Body::Spectral(t) => {
                    let c = table_kernel(t, g.n_s, g.n_theta);
                    let (ns, nt) = (g.n_s, g.n_theta);
                    rows.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                        let (ia, ja) = (i / nt, i % nt);
                        for (j, r) in row.iter_mut().enumerate() {
                            let (ib, jb) = (j / nt, j % nt);
                            let di = (ia + ns - ib) % ns;
                            let dj = (ja + nt - jb) % nt;
                            *r += c[di * nt + dj] * wt(j);
                        }
                    });
                }
                Body::Kernel(k) => {
                    let k = *k;
                    let punct = k.punctured();
                    rows.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                        for (j, r) in row.iter_mut().enumerate() {
                            if punct && i == j {
                                continue;
                            }
                            *r += pair_entry(g, k, i, j) * wt(j);
                        }
                    });
                }
            }
        }
        Ok(Mat::from_fn(n, n, |i, j| rows[i * n + j]))
    }
}

/// Shared per-grid data for assembling operators.
pub struct OperatorContext {
    pub grid: Arc<SurfaceGrid>,
    pub zeta: LatticeZeta,
    /// `J/ε` at the nodes.
    pub j_over_eps: Arc<Vec<f64>>,
    symbols: std::sync::OnceLock<Arc<TruncatedSymbols>>,
}

impl OperatorContext {
    pub fn new(grid: SurfaceGrid) -> Self {
        let zeta = LatticeZeta::for_grid(&grid);
        let eps = grid.epsilon();
        let j = grid.nodes.iter().map(|n| n.jacobian / eps).collect();
        OperatorContext { grid: Arc::new(grid), zeta, j_over_eps: Arc::new(j), symbols: Default::default() }
    }

    pub fn symbols(&self) -> Result<Arc<TruncatedSymbols>> {
        if let Some(s) = self.symbols.get() {
            return Ok(s.clone());
        }
        let g = &self.grid;
        let s = Arc::new(TruncatedSymbols::new(g.epsilon(), g.n_s, g.n_theta)?);
        Ok(self.symbols.get_or_init(|| s).clone())
    }

    fn kappa_diag(&self, f: impl Fn(f64) -> f64) -> Arc<Vec<f64>> {
        Arc::new(self.grid.nodes.iter().map(|n| f(n.kappa_hat)).collect())
    }

    /// Single layer `S[φ] = ∫ G φ J dθ' ds'`.
    pub fn assemble_s(&self, backend: Backend) -> Result<DiscreteOperator> {
        let z = self.zeta;
        let eps = self.grid.epsilon();
        let cw = Some(&self.j_over_eps);
        Ok(match backend {
            Backend::Direct => DiscreteOperator::new("S[direct]", &self.grid)
                .with(cw, Body::Kernel(PairKernel::G))
                .with(cw, Body::Diagonal(self.kappa_diag(|k| -(z.z_r + eps * k * z.z_s2) / FOUR_PI))),
            Backend::Split => DiscreteOperator::new("S[split]", &self.grid)
                .with(cw, Body::Spectral(Arc::new(self.symbols()?.p_s.clone())))
                .with(cw, Body::Kernel(PairKernel::GMinusGBar))
                .with(cw, Body::Diagonal(self.kappa_diag(|k| -eps * k * z.z_s2 / FOUR_PI))),
        })
    }

    /// Double layer `D[φ] = ∫ K_D φ J dθ' ds'`.
    pub fn assemble_d(&self, backend: Backend) -> Result<DiscreteOperator> {
        let z = self.zeta;
        let eps = self.grid.epsilon();
        let cw = Some(&self.j_over_eps);
        let curv = move |k: f64| k * (0.5 * z.z_s2 - 1.5 * z.z_s2y2) / FOUR_PI;
        Ok(match backend {
            Backend::Direct => DiscreteOperator::new("D[direct]", &self.grid)
                .with(cw, Body::Kernel(PairKernel::Kd))
                .with(cw, Body::Diagonal(self.kappa_diag(|k| z.z_y2 / (2.0 * eps * FOUR_PI) - curv(k)))),
            Backend::Split => DiscreteOperator::new("D[split]", &self.grid)
                .with(cw, Body::Spectral(Arc::new(self.symbols()?.p_d.clone())))
                .with(cw, Body::Kernel(PairKernel::KdMinusKdBar))
                .with(cw, Body::Diagonal(self.kappa_diag(|k| -curv(k)))),
        })
    }

    /// Straight single layer `S̄` (symbol `m_S`, weight `ε`). The `(0,0)`
    /// mode is undefined, so inputs must have zero `s`-mean.
    pub fn straight_s(&self) -> Result<DiscreteOperator> {
        let mut op = DiscreteOperator::new("S_bar", &self.grid).with(None, Body::Spectral(Arc::new(self.symbols()?.m_s.clone())));
        op.zero_mean_input = true;
        Ok(op)
    }

    /// Straight double layer `D̄` (symbol `m_D`).
    pub fn straight_d(&self) -> Result<DiscreteOperator> {
        Ok(DiscreteOperator::new("D_bar", &self.grid).with(None, Body::Spectral(Arc::new(self.symbols()?.m_d.clone()))))
    }

    /// The pieces `R_{S,0..3}` of `S − S̄`.
    pub fn assemble_rs_pieces(&self) -> Result<[DiscreteOperator; 4]> {
        let z = self.zeta;
        let eps = self.grid.epsilon();
        let sym = self.symbols()?;
        let tail: Vec<f64> = sym
            .p_s
            .iter()
            .zip(&sym.m_s)
            .enumerate()
            .map(|(idx, (p, m))| if mode_index(idx / self.grid.n_theta, self.grid.n_s) == 0 { 0.0 } else { p - m })
            .collect();
        let mut rs0 = DiscreteOperator::new("R_S0", &self.grid).with(None, Body::Spectral(Arc::new(tail)));
        rs0.zero_mean_input = true;
        let rs1 = DiscreteOperator::new("R_S1", &self.grid).with(None, Body::Kernel(PairKernel::Rs1));
        let rs2 = DiscreteOperator::new("R_S2", &self.grid)
            .with(None, Body::Kernel(PairKernel::Rs2))
            .with(None, Body::Diagonal(self.kappa_diag(|k| -eps * k * z.z_s2 / FOUR_PI)));
        let rs3 = DiscreteOperator::new("R_S3", &self.grid)
            .with(None, Body::Kernel(PairKernel::Rs3))
            .with(None, Body::Diagonal(self.kappa_diag(|k| eps * k * z.z_r / FOUR_PI)));
        Ok([rs0, rs1, rs2, rs3])
    }

    /// Modified double layer `D' = D + ∫ φ/|x − X(s')| dS'` on the surface.
    pub fn assemble_dprime(&self, backend: Backend) -> Result<DiscreteOperator> {
        let d = self.assemble_d(backend)?;
        let mut op = d.with(None, Body::Kernel(PairKernel::DprimeCorrection));
        op.name = format!("D'[{backend:?}]").to_lowercase();
        Ok(op)
    }

    /// `½I + D'`.
    pub fn exterior_dirichlet_operator(&self, backend: Backend) -> Result<DiscreteOperator> {
        Ok(self.assemble_dprime(backend)?.with(None, Body::Identity(0.5)))
    }

    /// `½I − D`.
    pub fn half_minus_d(&self, backend: Backend) -> Result<DiscreteOperator> {
        let d = self.assemble_d(backend)?;
        let id = DiscreteOperator::new("I", &self.grid).with(None, Body::Identity(1.0));
        Ok(id.combine(0.5, &d, -1.0, "1/2 I - D"))
    }

    /// Split of `S̄⁻¹ ∫ S[h] ε dθ` for a `θ`-only density `h` at the sharp
    /// cutoff `|k| = 1/(2πε)`: `H_ε = S̄⁻¹(P_{≥}H₁ + H₂)`, `H₊ = S̄⁻¹ P_{<}H₁`,
    /// where `H₁` carries the weight `ε` and `H₂` the Jacobian correction.
    pub fn mean_in_s_split(&self, h: &[f64], backend: Backend) -> Result<MeanInS> {
        let g = &self.grid;
        if h.len() != g.n_theta {
            return Err(Error::Dimension(format!("h has {} samples, grid has n_theta = {}", h.len(), g.n_theta)));
        }
        let eps = g.epsilon();
        let phi = GridFunction::from_fn(g.n_s, g.n_theta, |_, _| 0.0);
        let phi = GridFunction { values: (0..g.len()).map(|i| h[i % g.n_theta]).collect(), ..phi };
        let s = self.assemble_s(backend)?;
        let total = s.apply(&phi)?.theta_integral().scaled(eps);
        // H₂ is the part carried by J − ε = −ε²κ̂, i.e. the R_{S,3}-type kernel
        let rs3 = &self.assemble_rs_pieces()?[3];
        let h2 = rs3.apply(&phi)?.theta_integral().scaled(eps);
        let mut h1 = total.clone();
        h1.axpy(-1.0, &h2);
        let cutoff = 1.0 / (2.0 * PI * eps);
        let s_inv = |f: &GridFunction, keep: &dyn Fn(f64) -> bool| -> Result<GridFunction> {
            let fft = Fft2::new(f.n_s, 1);
            let mut c = fft.forward(&f.values);
            for (i, ci) in c.iter_mut().enumerate() {
                let k = mode_index(i, f.n_s);
                if k == 0 || !keep(k.unsigned_abs() as f64) {
                    *ci = num_complex::Complex64::new(0.0, 0.0);
                } else {
                    *ci /= crate::spectral::symbol_m_s(eps, k, 0)?;
                }
            }
            Ok(GridFunction { values: fft.inverse_real(c), ..f.clone() })
        };
        let mut h_eps = s_inv(&h1, &|k| k >= cutoff)?;
        h_eps.axpy(1.0, &s_inv(&h2, &|_| true)?);
        let h_plus = s_inv(&h1, &|k| k < cutoff)?;
        Ok(MeanInS { h1, h2, h_eps, h_plus })
    }
}

#[derive(Debug, Clone)]
pub struct MeanInS {
    pub h1: GridFunction,
    pub h2: GridFunction,
    pub h_eps: GridFunction,
    pub h_plus: GridFunction,
}

/// Modified double layer evaluated off the surface by the plain trapezoid rule.
pub fn dprime_off_surface(grid: &SurfaceGrid, phi: &GridFunction, points: &[[f64; 3]]) -> Vec<f64> {
    let w = grid.weight();
    points
        .par_iter()
        .map(|p| {
            let mut acc = 0.0;
            for (j, n) in grid.nodes.iter().enumerate() {
                let r = sub(*p, n.x);
                let d = norm(r);
                let dc = norm(sub(*p, grid.center[j / grid.n_theta]));
                acc += (dot(r, n.normal) / (FOUR_PI * d * d * d) + 1.0 / dc) * phi.values[j] * n.jacobian;
            }
            acc * w
        })
        .collect()
}

/// `S[w](p) + D[v](p)` off the surface by the plain trapezoid rule.
pub fn green_representation(grid: &SurfaceGrid, w: &GridFunction, v: &GridFunction, points: &[[f64; 3]]) -> Vec<f64> {
    let wt = grid.weight();
    points
        .par_iter()
        .map(|p| {
            let mut acc = 0.0;
            for (j, n) in grid.nodes.iter().enumerate() {
                let r = sub(*p, n.x);
                let d = norm(r);
                acc += (w.values[j] / (FOUR_PI * d) + v.values[j] * dot(r, n.normal) / (FOUR_PI * d * d * d)) * n.jacobian;
            }
            acc * wt
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveConfig, SurfaceSpec};

    fn ctx(eps: f64, ns: usize, nt: usize) -> OperatorContext {
        let spec = SurfaceSpec::from_config(&CurveConfig::circle(), eps).unwrap();
        OperatorContext::new(SurfaceGrid::new(spec, ns, nt).unwrap())
    }

    #[test]
    fn dense_matches_apply() {
        let c = ctx(1.0 / 32.0, 16, 8);
        let phi = GridFunction::from_fn(16, 8, |s, t| (2.0 * PI * s).sin() + 0.3 * t.cos());
        for b in [Backend::Direct, Backend::Split] {
            for op in [c.assemble_s(b).unwrap(), c.assemble_dprime(b).unwrap()] {
                let m = op.to_dense().unwrap();
                let a = op.apply(&phi).unwrap();
                for i in 0..phi.values.len() {
                    let r: f64 = (0..phi.values.len()).map(|j| m[(i, j)] * phi.values[j]).sum();
                    assert!((r - a.values[i]).abs() < 1e-12 * (1.0 + r.abs()), "{} row {i}", op.name);
                }
            }
        }
    }

    #[test]
    fn double_layer_of_one() {
        let c = ctx(1.0 / 64.0, 128, 16);
        let one = GridFunction::from_fn(128, 16, |_, _| 1.0);
        for b in [Backend::Direct, Backend::Split] {
            let d = c.assemble_d(b).unwrap().apply(&one).unwrap();
            for v in &d.values {
                assert!((v + 0.5).abs() < 2e-2, "{b:?} {v}");
            }
        }
    }
}
