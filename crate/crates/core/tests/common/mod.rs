//! Reference computations for the acceptance and property suites.
//!
//! Everything here is written from the field definitions directly; none of it
//! calls into the library's own algebra, so agreement is a real cross-check.

#![allow(dead_code)]

use rand::Rng;
use twofold::TwoFoldParams;

/// Side fields of the normal form at `x1 = 0`, plus the hidden term.
pub fn side_fields(p: &TwoFoldParams, x2: f64, x3: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    (
        [-x2, p.a1, p.b1],
        [x3, p.b2, p.a2],
        [p.alpha, 0.0, 0.0],
    )
}

/// The blown-up combination evaluated component by component.
pub fn combination(p: &TwoFoldParams, lambda: f64, x2: f64, x3: f64) -> [f64; 3] {
    let (fp, fm, g) = side_fields(p, x2, x3);
    let wp = (1.0 + lambda) / 2.0;
    let wm = (1.0 - lambda) / 2.0;
    let wg = 1.0 - lambda * lambda;
    [0, 1, 2].map(|i| wp * fp[i] + wm * fm[i] + wg * g[i])
}

/// The three conditions under which the reduced flow for `λ` is 0/0:
/// `f1 = 0`, `∂f1/∂λ = 0` and `(f2, f3) · ∂f1/∂(x2, x3) = 0`.
pub fn fold_conditions(p: &TwoFoldParams, lambda: f64, x2: f64, x3: f64) -> [f64; 3] {
    let h = 1e-3;
    let f = combination(p, lambda, x2, x3);
    // f1 is quadratic in λ and linear in (x2, x3): central differences are exact
    // up to rounding.
    let f1 = |l: f64, a: f64, b: f64| combination(p, l, a, b)[0];
    let d_lambda = (f1(lambda + h, x2, x3) - f1(lambda - h, x2, x3)) / (2.0 * h);
    let d_x2 = (f1(lambda, x2 + h, x3) - f1(lambda, x2 - h, x3)) / (2.0 * h);
    let d_x3 = (f1(lambda, x2, x3 + h) - f1(lambda, x2, x3 - h)) / (2.0 * h);
    [f[0], d_lambda, f[1] * d_x2 + f[2] * d_x3]
}

/// Number of `λ_s` in `[-1, 1]` by the four-case existence analysis, with
/// `d = b1 - b2`. The threshold `|d| = 2` itself is excluded.
pub fn expected_root_count(a1: f64, a2: f64, d: f64) -> usize {
    match (a1 > 0.0, a2 > 0.0) {
        (true, true) | (false, false) => 1,
        (true, false) => {
            if d > 2.0 {
                2
            } else {
                0
            }
        }
        (false, true) => {
            if d < -2.0 {
                2
            } else {
                0
            }
        }
    }
}

/// Desingularized slow flow on the sliding manifold in the chart `(λ, x3)`,
/// with `x2` solved from `f1 = 0` (needs `λ ≠ -1`).
///
/// The reduced flow is `λ' = -N / ∂f1/∂λ`, `x3' = f3`; multiplying through by
/// `-∂f1/∂λ` removes the singular denominator.
pub fn desingularized(p: &TwoFoldParams, lambda: f64, x3: f64) -> [f64; 2] {
    let x2 = (1.0 - lambda) * (x3 + 2.0 * p.alpha * (1.0 + lambda)) / (1.0 + lambda);
    let c = fold_conditions(p, lambda, x2, x3);
    let f = combination(p, lambda, x2, x3);
    [c[2], -c[1] * f[2]]
}

/// Jacobian of [`desingularized`] by central differences.
pub fn desingularized_jacobian(p: &TwoFoldParams, lambda: f64, x3: f64) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let dl = {
        let a = desingularized(p, lambda + h, x3);
        let b = desingularized(p, lambda - h, x3);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    let dx = {
        let a = desingularized(p, lambda, x3 + h);
        let b = desingularized(p, lambda, x3 - h);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    [[dl[0], dx[0]], [dl[1], dx[1]]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearType {
    Saddle,
    Node,
    Focus,
}

/// Type of a planar equilibrium from its (numerical) eigenvalues.
pub fn linear_type(j: [[f64; 2]; 2]) -> LinearType {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return LinearType::Focus;
    }
    let s = disc.sqrt();
    let (l1, l2) = ((tr - s) / 2.0, (tr + s) / 2.0);
    if l1 * l2 < 0.0 {
        LinearType::Saddle
    } else {
        LinearType::Node
    }
}

pub fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Random normal-form constants: `b` in `[-5, 5]`, `|α|` in `[0.05, 1]`.
pub fn random_params<R: Rng>(rng: &mut R) -> TwoFoldParams {
    let a1 = random_sign(rng);
    let a2 = random_sign(rng);
    let b1 = rng.gen_range(-5.0..5.0);
    let b2 = rng.gen_range(-5.0..5.0);
    let alpha = random_sign(rng) * rng.gen_range(0.05..1.0);
    TwoFoldParams::new(a1, a2, b1, b2, alpha).unwrap()
}

/// Sup-norm distance between two states.
pub fn sup_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}
