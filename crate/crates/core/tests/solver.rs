//! Solver-level properties on small grids.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use slenderlap::geometry::{CurveConfig, SurfaceSpec};
use slenderlap::grid::SurfaceGrid;
use slenderlap::operators::{Backend, OperatorContext};
use slenderlap::solver::{greens_identity_ladder, solve_exterior_dirichlet, PointCharges, SlenderSystem};
use slenderlap::spectral::GridFunction;

const EPS: f64 = 1.0 / 32.0;
const NS: usize = 64;
const NT: usize = 8;

fn system(backend: Backend) -> &'static SlenderSystem {
    static DIRECT: OnceLock<SlenderSystem> = OnceLock::new();
    static SPLIT: OnceLock<SlenderSystem> = OnceLock::new();
    let cell = match backend {
        Backend::Direct => &DIRECT,
        Backend::Split => &SPLIT,
    };
    cell.get_or_init(|| {
        let spec = SurfaceSpec::from_config(&CurveConfig::circle(), EPS).unwrap();
        let grid = SurfaceGrid::new(spec, NS, NT).unwrap();
        SlenderSystem::new(OperatorContext::new(grid), backend).unwrap()
    })
}

fn modes(c: &[f64]) -> GridFunction {
    GridFunction::on_s(NS, |s| c.iter().enumerate().map(|(k, a)| a * (2.0 * PI * (k + 1) as f64 * s + 0.3 * k as f64).cos()).sum())
}

fn shift(f: &GridFunction, m: usize) -> GridFunction {
    let n = f.values.len();
    GridFunction { values: (0..n).map(|i| f.values[(i + n - m) % n]).collect(), ..f.clone() }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn rotation_equivariance_on_circle() {
    for backend in [Backend::Direct, Backend::Split] {
        let sys = system(backend);
        let f = modes(&[1.0, -0.4, 0.25, 0.1]);
        let v = sys.ntd(&f).unwrap().v;
        for m in [1, 5, 17] {
            let vr = sys.ntd(&shift(&f, m)).unwrap().v;
            let e = max_diff(&vr.values, &shift(&v, m).values) / v.sup_norm();
            assert!(e < 1e-9, "{backend:?} shift {m}: {e}");
            let fr = sys.dtn(&shift(&v, m)).unwrap().f;
            let e = max_diff(&fr.values, &shift(&f, m).values) / f.sup_norm();
            assert!(e < 1e-9, "{backend:?} shift {m}: {e}");
        }
    }
}

#[test]
fn mutual_inversion() {
    for backend in [Backend::Direct, Backend::Split] {
        let sys = system(backend);
        let v = modes(&[0.8, 0.0, -0.3, 0.2, 0.05]);
        let f = sys.dtn(&v).unwrap().f;
        let back = sys.ntd(&f).unwrap().v;
        assert!(max_diff(&back.values, &v.values) / v.sup_norm() < 1e-6);
        let series = sys.ntd_neumann_series(&f, 1e-12, 100).unwrap();
        assert!(series.contraction < 1.0);
        assert!(max_diff(&series.v.values, &back.values) < 1e-8);
    }
}

#[test]
fn constant_data_gives_constant_positive_flux() {
    // rotation invariance of the circle makes the response to a constant uniform
    let sys = system(Backend::Split);
    let one = GridFunction::on_s(NS, |_| 1.0);
    let f = sys.dtn(&one).unwrap().f;
    let spread = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(f.values[0] > 0.0);
    assert!(spread < 1e-9 * f.values[0].abs(), "{spread}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dtn_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c1 in prop::collection::vec(-1.0f64..1.0, 6), c2 in prop::collection::vec(-1.0f64..1.0, 6)) {
        let sys = system(Backend::Split);
        let (v1, v2) = (modes(&c1), modes(&c2));
        let mut v = v1.scaled(a);
        v.axpy(b, &v2);
        let f = sys.dtn(&v).unwrap().f;
        let mut g = sys.dtn(&v1).unwrap().f.scaled(a);
        g.axpy(b, &sys.dtn(&v2).unwrap().f);
        prop_assert!(max_diff(&f.values, &g.values) <= 1e-10 * (1.0 + g.sup_norm()));
    }
}

#[test]
fn opposite_charges_converge() {
    let charges = PointCharges(vec![(0.0, 1.0), (0.5, -1.0)]);
    let ladder = greens_identity_ladder(&CurveConfig::circle(), 1.0 / 128.0, &[64, 128, 256], 16, &charges, Backend::Split).unwrap();
    assert!(ladder.min_order >= 1.0, "{:?}", ladder.orders);
}

#[test]
fn exterior_unit_data_decays_like_inverse_distance() {
    let spec = SurfaceSpec::from_config(&CurveConfig::circle(), EPS).unwrap();
    let ctx = OperatorContext::new(SurfaceGrid::new(spec, NS, NT).unwrap());
    let one = GridFunction::from_fn(NS, NT, |_, _| 1.0);
    let dir = 1.0 / 3f64.sqrt();
    let radii = [10.0, 20.0, 40.0];
    let points: Vec<[f64; 3]> = radii.iter().map(|r| [r * dir, r * dir, r * dir]).collect();
    let sol = solve_exterior_dirichlet(&ctx, &one, &points, Backend::Split).unwrap();
    let c: Vec<f64> = sol.values.iter().zip(&radii).map(|(u, r)| u * r).collect();
    assert!(c.iter().all(|c| *c > 0.0));
    assert!((c[1] - c[2]).abs() < 0.5 * (c[0] - c[1]).abs() + 1e-3 * c[2], "{c:?}");
    assert!((c[2] - c[1]).abs() / c[2] < 0.02, "{c:?}");
}

#[test]
fn exterior_rejects_points_near_surface() {
    let spec = SurfaceSpec::from_config(&CurveConfig::circle(), EPS).unwrap();
    let ctx = OperatorContext::new(SurfaceGrid::new(spec.clone(), NS, NT).unwrap());
    let one = GridFunction::from_fn(NS, NT, |_, _| 1.0);
    let p = spec.surface_point(0.1, 0.0).position;
    assert!(solve_exterior_dirichlet(&ctx, &one, &[p], Backend::Direct).is_err());
}

#[test]
fn geometry_preconditions_enforced() {
    assert!(SurfaceSpec::from_config(&CurveConfig::circle(), 0.2).is_err());
    assert!(SurfaceSpec::from_config(&CurveConfig::perturbed_circle(0.05), 0.05).is_err());
    let spec = SurfaceSpec::from_config(&CurveConfig::circle(), 1.0 / 64.0).unwrap();
    assert!(SurfaceGrid::new(spec, 3, 16).is_err());
}
