//! Sliding dynamics inside the switching surface.
//!
//! On `x1 = 0` the normal component `f1(0, x2, x3; λ)` is a quadratic in
//! `λ`. Its zeros in `[-1, 1]` form the sliding manifold `M^S`; where
//! `∂f1/∂λ` also vanishes the manifold folds along the curve `L`.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::field::{LayerQuadratic, PiecewiseSmoothSystem, TwoFoldParams};

/// Accuracy demanded of a sliding root, `|f1| ≤ RESIDUAL_TOL`.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Sign tests on `f1(·; ±1)` treat magnitudes below this as zero.
pub const CLASSIFY_TOL: f64 = 1e-12;
/// Precondition checks on caller-supplied sliding values.
pub const CONTRACT_TOL: f64 = 1e-9;
/// Relative discriminant size below which two roots are merged.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlidingError {
    #[error("λ = {lambda} is not a sliding value here: |f1| = {residual:e}")]
    NotSliding { lambda: f64, residual: f64 },
    #[error("curve sampling needs at least 2 points, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlidingSolution {
    pub lambda: f64,
    /// `(ẋ2, ẋ3)` on the surface at this `λ`.
    pub slide_vector: [f64; 2],
    pub stability: Stability,
    /// Discriminant numerically zero: a fold contact of `M^S`.
    pub double_root: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionClass {
    Crossing,
    AttractingSliding,
    RepellingSliding,
    Tangency,
}

/// Roots of `q` in `[-1, 1]`, ascending, each flagged when it is a double root.
pub fn quadratic_roots_in_unit(q: &LayerQuadratic) -> Vec<(f64, bool)> {
    let mut out: Vec<(f64, bool)> = quadratic_real_roots(q)
        .into_iter()
        .filter(|(r, _)| (-1.0 - 1e-12..=1.0 + 1e-12).contains(r))
        .map(|(r, d)| (r.clamp(-1.0, 1.0), d))
        .collect();
    out.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-15);
    out
}

/// All real roots of `q`, ascending and polished.
pub fn quadratic_real_roots(q: &LayerQuadratic) -> Vec<(f64, bool)> {
    let scale = q.a.abs().max(q.b.abs()).max(q.c.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let (a, b, c) = (q.a / scale, q.b / scale, q.c / scale);
    let mut roots: Vec<(f64, bool)> = Vec::with_capacity(2);
    if a.abs() <= 1e-15 {
        if b.abs() <= 1e-15 {
            return Vec::new();
        }
        roots.push((-c / b, false));
    } else {
        let disc = b * b - 4.0 * a * c;
        let size = (b * b).max((4.0 * a * c).abs());
        if disc.abs() <= DOUBLE_ROOT_TOL * size {
            roots.push((-b / (2.0 * a), true));
        } else if disc > 0.0 {
            let sq = disc.sqrt();
            let t = -0.5 * (b + b.signum() * sq);
            roots.push((t / a, false));
            if t != 0.0 {
                roots.push((c / t, false));
            } else {
                roots.push((-t / a, false));
            }
        }
    }
    let mut out: Vec<(f64, bool)> = roots
        .into_iter()
        .map(|(r, double)| (if double { r } else { polish(q, r) }, double))
        .filter(|(r, _)| r.is_finite())
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

fn polish(q: &LayerQuadratic, mut r: f64) -> f64 {
    for _ in 0..3 {
        let d = q.derivative(r);
        if d == 0.0 {
            break;
        }
        let step = q.eval(r) / d;
        if !step.is_finite() {
            break;
        }
        let next = r - step;
        if (q.eval(next)).abs() >= q.eval(r).abs() {
            break;
        }
        r = next;
    }
    r
}

/// Sliding values of `λ` at `(0, x2, x3)`; empty where the flow crosses.
pub fn sliding_lambda(sys: &PiecewiseSmoothSystem, x2: f64, x3: f64) -> Vec<SlidingSolution> {
    let q = layer_quadratic_of(sys, x2, x3);
    quadratic_roots_in_unit(&q)
        .into_iter()
        .map(|(lambda, double_root)| {
            let v = sys.combine(&[0.0, x2, x3], lambda);
            SlidingSolution {
                lambda,
                slide_vector: [v[1], v[2]],
                stability: if q.derivative(lambda) < 0.0 {
                    Stability::Attracting
                } else {
                    Stability::Repelling
                },
                double_root,
            }
        })
        .collect()
}

/// `f1(0, x2, x3; ·)`, in closed form for normal-form systems.
pub fn layer_quadratic_of(sys: &PiecewiseSmoothSystem, x2: f64, x3: f64) -> LayerQuadratic {
    match sys.normal_form {
        Some(p) => normal_form_quadratic(&p, x2, x3),
        None => sys.layer_quadratic(x2, x3),
    }
}

/// True where `f1(0, x2, x3; λ)` vanishes for every `λ`, so sliding is
/// indeterminate (the unperturbed two-fold line).
pub fn layer_is_indeterminate(sys: &PiecewiseSmoothSystem, x2: f64, x3: f64) -> bool {
    let q = sys.layer_quadratic(x2, x3);
    q.a == 0.0 && q.b == 0.0 && q.c == 0.0
}

/// Normal-form `f1 = -α λ² - ((x2+x3)/2) λ + (x3-x2)/2 + α`.
pub fn normal_form_quadratic(p: &TwoFoldParams, x2: f64, x3: f64) -> LayerQuadratic {
    LayerQuadratic {
        a: -p.alpha,
        b: -0.5 * (x2 + x3),
        c: 0.5 * (x3 - x2) + p.alpha,
    }
}

pub fn region_classify(sys: &PiecewiseSmoothSystem, x2: f64, x3: f64) -> RegionClass {
    let (plus, minus) = sys.normal_components(x2, x3);
    if plus.abs() <= CLASSIFY_TOL || minus.abs() <= CLASSIFY_TOL {
        RegionClass::Tangency
    } else if plus < 0.0 && minus > 0.0 {
        RegionClass::AttractingSliding
    } else if plus > 0.0 && minus < 0.0 {
        RegionClass::RepellingSliding
    } else {
        RegionClass::Crossing
    }
}

/// `(ẋ2, ẋ3)` at a sliding value of `λ`.
pub fn sliding_vector(
    sys: &PiecewiseSmoothSystem,
    x2: f64,
    x3: f64,
    lambda: f64,
) -> Result<[f64; 2], SlidingError> {
    let v = sys.combine(&[0.0, x2, x3], lambda);
    if v[0].abs() > CONTRACT_TOL || !(-1.0..=1.0).contains(&lambda) {
        return Err(SlidingError::NotSliding {
            lambda,
            residual: v[0].abs(),
        });
    }
    Ok([v[1], v[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub x2: f64,
    pub x3: f64,
    /// `(1, 2α(λ-1), -2α(λ+1))`.
    pub tangent: [f64; 3],
}

/// Samples of the fold curve `L` of the normal-form sliding manifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveL {
    pub points: Vec<CurvePoint>,
}

impl CurveL {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,x2,x3,tx_lambda,tx_x2,tx_x3\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.lambda, p.x2, p.x3, p.tangent[0], p.tangent[1], p.tangent[2]
            );
        }
        s
    }
}

/// Point of `L` at a given `λ`: `x2 = α(λ-1)²`, `x3 = -α(λ+1)²`.
pub fn curve_point(p: &TwoFoldParams, lambda: f64) -> CurvePoint {
    let a = p.alpha;
    CurvePoint {
        lambda,
        x2: a * (lambda - 1.0) * (lambda - 1.0),
        x3: -a * (lambda + 1.0) * (lambda + 1.0),
        tangent: [1.0, 2.0 * a * (lambda - 1.0), -2.0 * a * (lambda + 1.0)],
    }
}

pub fn curve_l(p: &TwoFoldParams, n: usize) -> Result<CurveL, SlidingError> {
    if n < 2 {
        return Err(SlidingError::TooFewSamples(n));
    }
    let points = (0..n)
        .map(|i| {
            let lambda = if i + 1 == n {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (n - 1) as f64
            };
            curve_point(p, lambda)
        })
        .collect();
    Ok(CurveL { points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub is_degenerate: bool,
    /// `∂²f1/∂λ²`, constant along `L` for the normal form.
    pub second_derivative: f64,
    /// `(λ, ∂²f1/∂λ²)` evaluated from the layer polynomial at samples of `L`.
    pub samples: Vec<(f64, f64)>,
    pub max_abs_second_derivative: f64,
    /// Largest `|f1|` or `|∂f1/∂λ|` over the samples of `L`.
    pub max_l_residual: f64,
}

pub const DEGENERACY_SAMPLES: usize = 101;

pub fn degeneracy_report(p: &TwoFoldParams) -> DegeneracyReport {
    let sys = crate::field::normal_form_system(*p);
    let curve = curve_l(p, DEGENERACY_SAMPLES).expect("sample count is at least 2");
    let mut samples = Vec::with_capacity(curve.points.len());
    let mut max_abs = 0.0f64;
    let mut max_res = 0.0f64;
    for pt in &curve.points {
        let q = sys.layer_quadratic(pt.x2, pt.x3);
        let d2 = q.second_derivative();
        max_abs = max_abs.max(d2.abs());
        max_res = max_res
            .max(q.eval(pt.lambda).abs())
            .max(q.derivative(pt.lambda).abs());
        samples.push((pt.lambda, d2));
    }
    DegeneracyReport {
        is_degenerate: p.alpha == 0.0,
        second_derivative: -2.0 * p.alpha,
        samples,
        max_abs_second_derivative: max_abs,
        max_l_residual: max_res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::normal_form_system;

    fn nf(a1: f64, a2: f64, b1: f64, b2: f64, alpha: f64) -> PiecewiseSmoothSystem {
        normal_form_system(TwoFoldParams::new(a1, a2, b1, b2, alpha).unwrap())
    }

    #[test]
    fn sliding_lambda_unperturbed_examples() {
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.0);
        let s = sliding_lambda(&sys, 1.0, 1.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].lambda, 0.0);
        assert_eq!(s[0].stability, Stability::Attracting);

        let s = sliding_lambda(&sys, 1.0, 3.0);
        assert_eq!(s.len(), 1);
        assert!((s[0].lambda - 0.5).abs() < 1e-15);

        assert!(sliding_lambda(&sys, 1.0, -1.0).is_empty());
        let s = sliding_lambda(&sys, -1.0, -2.0);
        assert_eq!(s[0].stability, Stability::Repelling);
    }

    #[test]
    fn general_and_closed_form_paths_agree() {
        let p = TwoFoldParams::new(1.0, -1.0, 0.5, 2.0, 0.3).unwrap();
        let closed = normal_form_system(p);
        let mut general = closed.clone();
        general.normal_form = None;
        for &(x2, x3) in &[(1.0, 1.0), (0.1, -0.2), (-0.5, -0.4), (0.3, -0.9)] {
            let a = sliding_lambda(&closed, x2, x3);
            let b = sliding_lambda(&general, x2, x3);
            assert_eq!(a.len(), b.len());
            for (u, v) in a.iter().zip(&b) {
                assert!((u.lambda - v.lambda).abs() < 1e-13);
                assert_eq!(u.stability, v.stability);
            }
        }
    }

    #[test]
    fn perturbed_layer_can_have_two_roots() {
        // Inside the crossing wedge near the origin the α-term folds M^S.
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.2);
        let s = sliding_lambda(&sys, 0.05, -0.1);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].stability, Stability::Repelling);
        assert_eq!(s[1].stability, Stability::Attracting);
        for sol in &s {
            assert!(sys.combine(&[0.0, 0.05, -0.1], sol.lambda)[0].abs() <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn double_root_is_flagged_once() {
        let p = TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap();
        let sys = normal_form_system(p);
        let pt = curve_point(&p, 0.0);
        let s = sliding_lambda(&sys, pt.x2, pt.x3);
        assert_eq!(s.len(), 1);
        assert!(s[0].double_root);
        assert!(s[0].lambda.abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.0);
        assert_eq!(region_classify(&sys, 1.0, 1.0), RegionClass::AttractingSliding);
        assert_eq!(region_classify(&sys, -1.0, -1.0), RegionClass::RepellingSliding);
        assert_eq!(region_classify(&sys, 1.0, -1.0), RegionClass::Crossing);
        assert_eq!(region_classify(&sys, 0.0, 1.0), RegionClass::Tangency);
    }

    #[test]
    fn sliding_vector_examples() {
        let (b1, b2) = (0.7, -1.9);
        let sys = nf(1.0, 1.0, b1, b2, 0.0);
        let v = sliding_vector(&sys, 2.0, 2.0, 0.0).unwrap();
        assert!((v[0] - (1.0 + b2) / 2.0).abs() < 1e-15);
        assert!((v[1] - (b1 + 1.0) / 2.0).abs() < 1e-15);
        // λ = +1 slides only where f1(+1) = -x2 vanishes.
        assert_eq!(sliding_vector(&sys, 0.0, 2.0, 1.0).unwrap(), [1.0, b1]);
        assert_eq!(sliding_vector(&sys, 2.0, 0.0, -1.0).unwrap(), [b2, 1.0]);
        assert!(matches!(
            sliding_vector(&sys, 1.0, 1.0, 0.5),
            Err(SlidingError::NotSliding { .. })
        ));
    }

    #[test]
    fn curve_l_examples() {
        let p0 = TwoFoldParams::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let c = curve_l(&p0, 5).unwrap();
        assert!(c.points.iter().all(|q| q.x2 == 0.0 && q.x3 == 0.0));
        assert_eq!(c.points[0].lambda, -1.0);
        assert_eq!(c.points[4].lambda, 1.0);

        let p = TwoFoldParams::new(1.0, 1.0, 0.0, 0.0, 0.2).unwrap();
        let q = curve_point(&p, 0.0);
        assert!((q.x2 - 0.2).abs() < 1e-15 && (q.x3 + 0.2).abs() < 1e-15);
        let q = curve_point(&p, 1.0);
        assert_eq!(q.x2, 0.0);
        assert!((q.x3 + 0.8).abs() < 1e-15);
        assert_eq!(curve_l(&p, 1), Err(SlidingError::TooFewSamples(1)));
    }

    #[test]
    fn curve_l_csv_header() {
        let p = TwoFoldParams::new(1.0, 1.0, 0.0, 0.0, 0.2).unwrap();
        let csv = curve_l(&p, 3).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("lambda,x2,x3,tx_lambda,tx_x2,tx_x3"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn degeneracy_examples() {
        let r = degeneracy_report(&TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.0).unwrap());
        assert!(r.is_degenerate);
        assert_eq!(r.max_abs_second_derivative, 0.0);
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.0);
        for i in 0..=100 {
            let l = -1.0 + i as f64 / 50.0;
            assert_eq!(sys.combine(&[0.0, 0.0, 0.0], l.min(1.0))[0], 0.0);
        }

        let r = degeneracy_report(&TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap());
        assert!(!r.is_degenerate);
        assert!((r.second_derivative + 0.4).abs() < 1e-15);
        assert!(r.samples.iter().all(|(_, d2)| (d2 + 0.4).abs() < 1e-12));

        let r = degeneracy_report(&TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, -0.3).unwrap());
        assert!(!r.is_degenerate);
        assert!((r.second_derivative - 0.6).abs() < 1e-15);
    }
}
