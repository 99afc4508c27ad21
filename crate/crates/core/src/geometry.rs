//! Closed filament geometry: arclength-parameterized centerline, a periodic
//! orthonormal frame with constant twist rate `κ₃`, and the tube surface
//! `x(s, θ) = X(s) + ε e_r(s, θ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type V3 = [f64; 3];

#[inline]
pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
#[inline]
pub fn scale(c: f64, a: V3) -> V3 {
    [c * a[0], c * a[1], c * a[2]]
}
#[inline]
pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}
#[inline]
pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
fn normalize(a: V3) -> V3 {
    scale(1.0 / norm(a), a)
}

/// Periodic distance on the unit circle.
pub fn periodic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Input description of a closed curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveConfig {
    Preset {
        preset: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
    Coefficients {
        cos: Vec<V3>,
        sin: Vec<V3>,
    },
}

impl CurveConfig {
    pub fn circle() -> Self {
        CurveConfig::Preset { preset: "circle".into(), params: Default::default() }
    }

    pub fn perturbed_circle(amplitude: f64) -> Self {
        let mut params = serde_json::Map::new();
        params.insert("amplitude".into(), amplitude.into());
        CurveConfig::Preset { preset: "perturbed_circle".into(), params }
    }

    /// Resolve a CLI curve argument: a preset name or a path to a JSON file.
    pub fn from_arg(arg: &str) -> Result<Self> {
        match arg {
            "circle" => Ok(Self::circle()),
            "perturbed_circle" | "perturbed-circle" => Ok(Self::perturbed_circle(0.05)),
            path => {
                let text = std::fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    /// Fourier coefficients `(cos, sin)` indexed by mode `n >= 0`.
    pub fn coefficients(&self) -> Result<(Vec<V3>, Vec<V3>)> {
        match self {
            CurveConfig::Coefficients { cos, sin } => Ok((cos.clone(), sin.clone())),
            CurveConfig::Preset { preset, params } => {
                let get = |k: &str, d: f64| params.get(k).and_then(|v| v.as_f64()).unwrap_or(d);
                let r = 1.0 / (2.0 * PI);
                match preset.as_str() {
                    "circle" => Ok((vec![[0.0; 3], [r, 0.0, 0.0]], vec![[0.0; 3], [0.0, r, 0.0]])),
                    "perturbed_circle" => {
                        let amp = get("amplitude", 0.05);
                        let mode = get("mode", 2.0).round() as usize;
                        if mode < 1 {
                            return Err(Error::Config("perturbation mode must be >= 1".into()));
                        }
                        let m = mode.max(1) + 1;
                        let mut c = vec![[0.0; 3]; m];
                        let mut s = vec![[0.0; 3]; m];
                        c[1][0] = r;
                        s[1][1] = r;
                        c[mode][2] += amp;
                        Ok((c, s))
                    }
                    other => Err(Error::Config(format!("unknown curve preset '{other}'"))),
                }
            }
        }
    }
}

/// Raw trigonometric curve `X̃(t)` and its derivatives.
#[derive(Debug, Clone)]
struct RawCurve {
    cos: Vec<V3>,
    sin: Vec<V3>,
}

impl RawCurve {
    /// Returns `(X̃, X̃_t, X̃_tt)` at `t`.
    fn eval(&self, t: f64) -> (V3, V3, V3) {
        let mut x = [0.0; 3];
        let mut xt = [0.0; 3];
        let mut xtt = [0.0; 3];
        let n_modes = self.cos.len().max(self.sin.len());
        for n in 0..n_modes {
            let w = 2.0 * PI * n as f64;
            let (sn, cn) = (w * t).sin_cos();
            let a = self.cos.get(n).copied().unwrap_or([0.0; 3]);
            let b = if n == 0 { [0.0; 3] } else { self.sin.get(n).copied().unwrap_or([0.0; 3]) };
            for d in 0..3 {
                x[d] += a[d] * cn + b[d] * sn;
                xt[d] += w * (-a[d] * sn + b[d] * cn);
                xtt[d] += -w * w * (a[d] * cn + b[d] * sn);
            }
        }
        (x, xt, xtt)
    }
}

/// Arclength-parameterized closed curve of total length one.
#[derive(Debug, Clone)]
pub struct Centerline {
    raw: RawCurve,
    pub arclength_total: f64,
    /// Fourier coefficients of the raw speed `|X̃_t|` (modes `0..m/2`).
    speed_modes: Vec<Complex64>,
    pub c_gamma: f64,
}

/// Centerline data at one arclength value.
#[derive(Debug, Clone, Copy)]
pub struct CenterlinePoint {
    pub x: V3,
    pub tangent: V3,
    /// `X_ss`, the curvature vector.
    pub curvature: V3,
}

const C_GAMMA_MIN: f64 = 1e-6;

impl Centerline {
    pub fn build(config: &CurveConfig) -> Result<Self> {
        let (cos, sin) = config.coefficients()?;
        let all_zero = cos.iter().skip(1).chain(sin.iter().skip(1)).all(|v| v.iter().all(|c| *c == 0.0));
        if all_zero {
            return Err(Error::DegenerateCurve("all non-constant coefficients vanish".into()));
        }
        let raw = RawCurve { cos, sin };
        let n_modes = raw.cos.len().max(raw.sin.len());
        let m = (64 * n_modes).next_power_of_two().max(2048);
        let mut buf: Vec<Complex64> = (0..m)
            .map(|j| {
                let (_, xt, _) = raw.eval(j as f64 / m as f64);
                Complex64::new(norm(xt), 0.0)
            })
            .collect();
        let min_speed = buf.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        let max_speed = buf.iter().map(|c| c.re).fold(0.0, f64::max);
        if min_speed <= 1e-10 * max_speed.max(1e-300) {
            return Err(Error::DegenerateCurve(format!("|X_t| reaches {min_speed:.3e}")));
        }
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let mut speed_modes: Vec<Complex64> = buf[..m / 2].iter().map(|c| c / m as f64).collect();
        let l = speed_modes[0].re;
        let keep = speed_modes.iter().rposition(|c| c.norm() > 1e-17 * l).unwrap_or(0) + 1;
        speed_modes.truncate(keep);
        let mut c = Centerline { raw, arclength_total: l, speed_modes, c_gamma: 0.0 };
        c.c_gamma = c.estimate_c_gamma(512);
        if c.c_gamma < C_GAMMA_MIN {
            return Err(Error::SelfIntersection(c.c_gamma));
        }
        Ok(c)
    }

    /// Normalized arclength `s(t) ∈ [0,1)` of the raw parameter.
    fn s_of_t(&self, t: f64) -> f64 {
        let l = self.arclength_total;
        let mut sigma = l * t;
        for (m, c) in self.speed_modes.iter().enumerate().skip(1) {
            // conjugate pair folded: 2 Re[c (e^{2πimt}-1)/(2πim)]
            let w = 2.0 * PI * m as f64;
            let e = Complex64::new(0.0, w * t).exp() - 1.0;
            sigma += 2.0 * (c * e / Complex64::new(0.0, w)).re;
        }
        sigma / l
    }

    /// Raw parameter `t` with `s(t) = s`, by Newton iteration.
    pub fn t_of_s(&self, s: f64) -> f64 {
        let l = self.arclength_total;
        let mut t = s;
        for _ in 0..50 {
            let f = self.s_of_t(t) - s;
            let (_, xt, _) = self.raw.eval(t);
            let step = f / (norm(xt) / l);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t
    }

    pub fn point(&self, s: f64) -> CenterlinePoint {
        let l = self.arclength_total;
        let t = self.t_of_s(s);
        let (x, xt, xtt) = self.raw.eval(t);
        let sp = norm(xt);
        let tangent = scale(1.0 / sp, xt);
        let along = dot(xtt, tangent);
        let curvature = scale(l / (sp * sp), sub(xtt, scale(along, tangent)));
        CenterlinePoint { x: scale(1.0 / l, x), tangent, curvature }
    }

    pub fn position(&self, s: f64) -> V3 {
        self.point(s).x
    }

    fn estimate_c_gamma(&self, n: usize) -> f64 {
        let pts: Vec<V3> = (0..n).map(|i| self.position(i as f64 / n as f64)).collect();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = periodic_dist(i as f64 / n as f64, j as f64 / n as f64);
                best = best.min(norm(sub(pts[i], pts[j])) / d);
            }
        }
        best
    }

    /// Maximum of `||X_s| - 1|` over `n` uniform samples (`n` a power of
    /// two), with `X_s` from the spectral derivative of the sampled positions.
    pub fn unit_speed_defect(&self, n: usize) -> f64 {
        let pts: Vec<V3> = (0..n).map(|i| self.position(i as f64 / n as f64)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut deriv = vec![[0.0; 3]; n];
        for d in 0..3 {
            let mut buf: Vec<Complex64> = pts.iter().map(|p| Complex64::new(p[d], 0.0)).collect();
            fwd.process(&mut buf);
            for (i, c) in buf.iter_mut().enumerate() {
                let k = if i < n / 2 { i as f64 } else if i == n / 2 { 0.0 } else { i as f64 - n as f64 };
                *c *= Complex64::new(0.0, 2.0 * PI * k / n as f64);
            }
            inv.process(&mut buf);
            for (out, c) in deriv.iter_mut().zip(&buf) {
                out[d] = c.re;
            }
        }
        deriv.iter().map(|v| (norm(*v) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Sampled periodic orthonormal frame with constant twist `κ₃`.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub n_samples: usize,
    pub e_t: Vec<V3>,
    pub e_n1: Vec<V3>,
    pub e_n2: Vec<V3>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub kappa3: f64,
    pub kappa_star: f64,
    /// Holonomy angle of the untwisted transport after one loop.
    pub holonomy: f64,
    /// Orthonormality drift of the transported frame before re-projection.
    pub transport_drift: f64,
    /// Twisted frame after one loop against the frame at `s = 0`.
    pub closure_defect: f64,
    curvature: Vec<V3>,
}

fn rotate(v: V3, axis_angle: V3) -> V3 {
    let th = norm(axis_angle);
    if th < 1e-300 {
        return v;
    }
    let k = scale(1.0 / th, axis_angle);
    let (s, c) = th.sin_cos();
    add(add(scale(c, v), scale(s, cross(k, v))), scale(dot(k, v) * (1.0 - c), k))
}

impl FrameField {
    /// Parallel transport with a fourth-order Magnus step, then the uniform
    /// twist that closes the frame.
    pub fn build(centerline: &Centerline, n_samples: usize) -> Result<Self> {
        if n_samples < 32 || !n_samples.is_power_of_two() {
            return Err(Error::Config(format!("n_samples must be a power of two >= 32, got {n_samples}")));
        }
        let sub_steps = 8usize;
        let m = n_samples * sub_steps;
        let h = 1.0 / m as f64;
        let darboux = |s: f64| {
            let p = centerline.point(s);
            cross(p.tangent, p.curvature)
        };
        let p0 = centerline.point(0.0);
        let mut n1 = if norm(p0.curvature) > 1e-8 {
            normalize(p0.curvature)
        } else {
            let trial = if p0.tangent[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            normalize(sub(trial, scale(dot(trial, p0.tangent), p0.tangent)))
        };
        let first_n1 = n1;
        let first_n2 = cross(p0.tangent, n1);
        let mut n2 = first_n2;
        let mut t_vec = p0.tangent;
        let mut raw_n1 = vec![n1];
        let mut drift: f64 = 0.0;
        let g = 3f64.sqrt() / 6.0;
        for step in 0..m {
            let s = step as f64 * h;
            let w1 = darboux(s + (0.5 - g) * h);
            let w2 = darboux(s + (0.5 + g) * h);
            let theta = sub(scale(0.5 * h, add(w1, w2)), scale(3f64.sqrt() / 12.0 * h * h, cross(w1, w2)));
            let nt = rotate(t_vec, theta);
            let nn1 = rotate(n1, theta);
            let nn2 = rotate(n2, theta);
            let exact_t = centerline.point(s + h).tangent;
            drift = drift
                .max(dot(nn1, nn2).abs())
                .max((dot(nn1, nn1) - 1.0).abs())
                .max(dot(nt, nn1).abs());
            if !nn1.iter().all(|c| c.is_finite()) {
                return Err(Error::NoConvergence("frame transport produced non-finite values".into()));
            }
            t_vec = exact_t;
            n1 = normalize(sub(nn1, scale(dot(nn1, t_vec), t_vec)));
            n2 = cross(t_vec, n1);
            if (step + 1) % sub_steps == 0 {
                raw_n1.push(n1);
            }
        }
        let holonomy = dot(n1, first_n2).atan2(dot(n1, first_n1));
        let mut kappa3 = -holonomy;
        if kappa3 <= -PI {
            kappa3 += 2.0 * PI;
        }
        if kappa3 > PI {
            kappa3 -= 2.0 * PI;
        }
        assert!(kappa3.abs() <= PI);
        let (sn1, cs1) = kappa3.sin_cos();
        let closed = add(scale(cs1, n1), scale(sn1, n2));
        let closure_defect = norm(sub(closed, first_n1)).max(norm(sub(t_vec, p0.tangent)));

        let mut e_t = Vec::with_capacity(n_samples);
        let mut e_n1 = Vec::with_capacity(n_samples);
        let mut e_n2 = Vec::with_capacity(n_samples);
        let mut kappa1 = Vec::with_capacity(n_samples);
        let mut kappa2 = Vec::with_capacity(n_samples);
        let mut curvature = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let s = i as f64 / n_samples as f64;
            let p = centerline.point(s);
            let a = raw_n1[i];
            let b = cross(p.tangent, a);
            let (sn, cs) = (kappa3 * s).sin_cos();
            let t1 = add(scale(cs, a), scale(sn, b));
            let t2 = add(scale(-sn, a), scale(cs, b));
            kappa1.push(dot(p.curvature, t1));
            kappa2.push(dot(p.curvature, t2));
            e_t.push(p.tangent);
            e_n1.push(t1);
            e_n2.push(t2);
            curvature.push(p.curvature);
        }
        let kappa_star = curvature.iter().map(|k| norm(*k)).fold(0.0, f64::max);
        Ok(FrameField {
            n_samples,
            e_t,
            e_n1,
            e_n2,
            kappa1,
            kappa2,
            kappa3,
            kappa_star,
            holonomy,
            transport_drift: drift,
            closure_defect,
            curvature,
        })
    }

    /// Trigonometric interpolation of the sampled frame at arbitrary `s`,
    /// re-orthonormalized against the exact tangent.
    pub fn at(&self, centerline: &Centerline, s: f64) -> (V3, V3, V3) {
        let n = self.n_samples;
        let sf = s.rem_euclid(1.0) * n as f64;
        let idx = sf.round();
        if (sf - idx).abs() < 1e-12 {
            let i = (idx as usize) % n;
            return (self.e_t[i], self.e_n1[i], self.e_n2[i]);
        }
        // periodic sinc (Dirichlet kernel) interpolation, even n
        let mut v = [0.0; 3];
        for j in 0..n {
            let x = PI * (sf - j as f64) / n as f64;
            let w = (n as f64 * x).sin() / (n as f64 * x.tan());
            v = add(v, scale(w, self.e_n1[j]));
        }
        let t = centerline.point(s).tangent;
        let n1 = normalize(sub(v, scale(dot(v, t), t)));
        (t, n1, cross(t, n1))
    }

    /// Discrete β-Hölder seminorm of the curvature vector over sample pairs.
    pub fn kappa_star_holder(&self, beta: f64) -> f64 {
        let n = self.n_samples;
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = periodic_dist(i as f64 / n as f64, j as f64 / n as f64);
                best = best.max(norm(sub(self.curvature[i], self.curvature[j])) / d.powf(beta));
            }
        }
        best
    }

    /// Worst deviation of `(e_t, e_n1, e_n2)` from orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_samples {
            let f = [self.e_t[i], self.e_n1[i], self.e_n2[i]];
            for a in 0..3 {
                for b in 0..3 {
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot(f[a], f[b]) - target).abs());
                }
            }
        }
        worst
    }
}

/// Surface of radius `ε` around the centerline.
#[derive(Debug, Clone)]
pub struct SurfaceSpec {
    pub centerline: Centerline,
    pub frame: FrameField,
    pub epsilon: f64,
    pub r_star: f64,
    /// Whether `ε < r_*/4`, the regime in which the estimates being tested are stated.
    pub within_estimate_regime: bool,
}

/// Pointwise surface data.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub position: V3,
    pub normal: V3,
    pub jacobian: f64,
    pub kappa_hat: f64,
}

impl SurfaceSpec {
    /// Hard requirements: `ε κ_* < 1/2` (so `J_ε > 0`) and `ε < c_Γ/4`.
    /// `r_*` is taken just below `1/(2κ_*)`; `ε < r_*/4` is recorded, not enforced.
    pub fn new(centerline: Centerline, frame: FrameField, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        let ks = frame.kappa_star;
        if epsilon * ks >= 0.5 {
            return Err(Error::Geometry(format!("epsilon*kappa_star = {:.4} >= 1/2", epsilon * ks)));
        }
        if epsilon >= centerline.c_gamma / 4.0 {
            return Err(Error::Geometry(format!(
                "epsilon {epsilon} >= c_gamma/4 = {:.4}",
                centerline.c_gamma / 4.0
            )));
        }
        let r_star = (1.0 - 1e-9) / (2.0 * ks);
        Ok(SurfaceSpec { centerline, frame, epsilon, r_star, within_estimate_regime: epsilon < r_star / 4.0 })
    }

    pub fn from_config(config: &CurveConfig, epsilon: f64) -> Result<Self> {
        let c = Centerline::build(config)?;
        let f = FrameField::build(&c, 256)?;
        SurfaceSpec::new(c, f, epsilon)
    }

    pub fn surface_point(&self, s: f64, theta: f64) -> SurfacePoint {
        let p = self.centerline.point(s);
        let (_, n1, n2) = self.frame.at(&self.centerline, s);
        let (sn, cs) = theta.sin_cos();
        let er = add(scale(cs, n1), scale(sn, n2));
        let kappa_hat = dot(p.curvature, er);
        SurfacePoint {
            position: add(p.x, scale(self.epsilon, er)),
            normal: er,
            jacobian: self.epsilon * (1.0 - self.epsilon * kappa_hat),
            kappa_hat,
        }
    }
}

/// JSON report emitted by `slenderlap geometry`.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub c_gamma: f64,
    pub kappa_star: f64,
    pub kappa3: f64,
    pub r_star: f64,
    pub epsilon: f64,
    pub within_estimate_regime: bool,
    pub arclength_raw: f64,
}

impl GeometryReport {
    pub fn new(spec: &SurfaceSpec) -> Self {
        GeometryReport {
            c_gamma: spec.centerline.c_gamma,
            kappa_star: spec.frame.kappa_star,
            kappa3: spec.frame.kappa3,
            r_star: spec.r_star,
            epsilon: spec.epsilon,
            within_estimate_regime: spec.within_estimate_regime,
            arclength_raw: spec.centerline.arclength_total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_geometry() {
        let c = Centerline::build(&CurveConfig::circle()).unwrap();
        assert!((c.arclength_total - 1.0).abs() < 1e-13);
        assert!((c.c_gamma - 2.0 / PI).abs() < 1e-10);
        let p = c.point(0.3);
        assert!((norm(p.curvature) - 2.0 * PI).abs() < 1e-10);
        let f = FrameField::build(&c, 64).unwrap();
        assert!(f.kappa3.abs() < 1e-8);
        assert!(f.orthonormality_defect() < 1e-12);
        for i in 0..64 {
            assert!((f.kappa1[i].hypot(f.kappa2[i]) - 2.0 * PI).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_curve_is_degenerate() {
        let cfg = CurveConfig::Coefficients { cos: vec![[1.0, 0.0, 0.0]], sin: vec![[0.0; 3]] };
        assert!(matches!(Centerline::build(&cfg), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn surface_jacobian_mean() {
        let spec = SurfaceSpec::from_config(&CurveConfig::perturbed_circle(0.05), 1.0 / 64.0).unwrap();
        let n = 32;
        let mut acc = 0.0;
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            acc += spec.surface_point(0.17, th).jacobian * 2.0 * PI / n as f64;
        }
        assert!((acc - 2.0 * PI * spec.epsilon).abs() < 1e-13);
    }
}
