//! Coordinate chain taking the blown-up two-fold layer onto the folded
//! normal form
//!
//! ```text
//! x̃1' = x̃2 + x̃1²,   dx̃2/dt̃ = b̃ x̃3 + c̃ x̃1,   dx̃3/dt̃ = ã
//! ```
//!
//! Stages: translation `y = (λ, x2, x3) - singularity`; rectification of `L`
//! onto the `z3` axis; an `ε`-dependent shift of `z2`; diagonal scaling to
//! `x̃`, with time `t̃ = -sign(α) t`.
//!
//! The fast row comes out as `(ε/√|α|) dx̃1/dt̃ = x̃2 + x̃1² + …`, so the
//! singular parameter of the normal form is `ε/√|α|`.

use serde::Serialize;
use thiserror::Error;

use crate::field::{TwoFoldParams, Vec3};
use crate::singularity::{self, FoldedSingularity, SingularityError};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Singularity(#[from] SingularityError),
    #[error("point leaves the rectification domain: (1+λs)² - y3/α = {0}")]
    Domain(f64),
    #[error("ε = {0} must lie in (0, 1]")]
    Epsilon(f64),
    #[error("order study needs at least two scales")]
    TooFewScales,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveFunctions {
    pub y1l: f64,
    pub y2l: f64,
    pub dy1l: f64,
    pub dy2l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformContext {
    pub params: TwoFoldParams,
    pub singularity: FoldedSingularity,
    pub epsilon: f64,
}

impl TransformContext {
    pub fn new(
        params: TwoFoldParams,
        singularity: FoldedSingularity,
        epsilon: f64,
    ) -> Result<Self, TransformError> {
        if params.alpha.abs() <= singularity::ALPHA_TOL {
            return Err(SingularityError::AlphaZero(params.alpha).into());
        }
        if (1.0 + singularity.lambda_s).abs() <= singularity::BOUNDARY_TOL {
            return Err(SingularityError::BoundarySingularity(singularity.lambda_s).into());
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(TransformError::Epsilon(epsilon));
        }
        Ok(TransformContext {
            params,
            singularity,
            epsilon,
        })
    }

    /// Contexts for every folded singularity of `params`.
    pub fn all_for(params: TwoFoldParams, epsilon: f64) -> Result<Vec<Self>, TransformError> {
        singularity::folded_singularities(&params)?
            .into_iter()
            .map(|s| TransformContext::new(params, s, epsilon))
            .collect()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, TransformError> {
        TransformContext::new(self.params, self.singularity, epsilon)
    }

    fn lambda_s(&self) -> f64 {
        self.singularity.lambda_s
    }

    fn sign_alpha(&self) -> f64 {
        self.params.alpha.signum()
    }

    /// `εf3s / (α(1+λs)²)`, the offset removed from `z2`.
    pub fn shift(&self) -> f64 {
        let one_plus = 1.0 + self.lambda_s();
        self.epsilon * self.singularity.constants.f3s / (self.params.alpha * one_plus * one_plus)
    }

    fn scales(&self) -> Vec3 {
        let s = self.sign_alpha();
        [
            self.params.alpha.abs().sqrt(),
            -s * self.singularity.constants.d1,
            -s,
        ]
    }

    pub fn to_y(&self, u: &Vec3) -> Vec3 {
        [
            u[0] - self.lambda_s(),
            u[1] - self.singularity.x2s,
            u[2] - self.singularity.x3s,
        ]
    }

    pub fn from_y(&self, y: &Vec3) -> Vec3 {
        [
            y[0] + self.lambda_s(),
            y[1] + self.singularity.x2s,
            y[2] + self.singularity.x3s,
        ]
    }

    /// Radius `h` of a sample sphere in `x̃` relative to the radius of
    /// convergence `|α|(1+λs)²` of the curve functions in `y3` (`|y3| = |x̃3|`).
    /// Past about one half, `h` is outside the asymptotic regime and the
    /// measured order drifts upward.
    pub fn curve_radius_ratio(&self, h: f64) -> f64 {
        let one_plus = 1.0 + self.lambda_s();
        h / (self.params.alpha.abs() * one_plus * one_plus)
    }

    /// `L` as a graph over `y3` with derivatives.
    pub fn curve_functions(&self, y3: f64) -> Result<CurveFunctions, TransformError> {
        let alpha = self.params.alpha;
        let one_plus = 1.0 + self.lambda_s();
        let arg = one_plus * one_plus - y3 / alpha;
        if arg < 0.0 || !arg.is_finite() {
            return Err(TransformError::Domain(arg));
        }
        let root = arg.sqrt();
        let y1l = root - one_plus;
        let y2l = -y3 - 4.0 * alpha * y1l;
        // one_plus + y1l == root
        let dy1l = -0.5 / (alpha * root);
        let dy2l = (1.0 - self.lambda_s() - y1l) / root;
        Ok(CurveFunctions {
            y1l,
            y2l,
            dy1l,
            dy2l,
        })
    }

    pub fn rectify(&self, y: &Vec3) -> Result<Vec3, TransformError> {
        let l = self.curve_functions(y[2])?;
        Ok([y[0] - l.y1l, y[1] - l.y2l, y[2]])
    }

    pub fn unrectify(&self, z: &Vec3) -> Result<Vec3, TransformError> {
        let l = self.curve_functions(z[2])?;
        Ok([z[0] + l.y1l, z[1] + l.y2l, z[2]])
    }

    /// Full map `(λ, x2, x3) ↦ x̃`.
    pub fn to_x_tilde(&self, u: &Vec3) -> Result<Vec3, TransformError> {
        let z = self.rectify(&self.to_y(u))?;
        let s = self.scales();
        Ok([s[0] * z[0], s[1] * (z[1] - self.shift()), s[2] * z[2]])
    }

    pub fn from_x_tilde(&self, xt: &Vec3) -> Result<Vec3, TransformError> {
        let s = self.scales();
        let z = [xt[0] / s[0], xt[1] / s[1] + self.shift(), xt[2] / s[2]];
        Ok(self.from_y(&self.unrectify(&z)?))
    }

    /// Jacobian of the rectification stage with respect to `y`.
    pub fn rectify_jacobian(&self, y: &Vec3) -> Result<Mat3, TransformError> {
        let l = self.curve_functions(y[2])?;
        Ok([
            [1.0, 0.0, -l.dy1l],
            [0.0, 1.0, -l.dy2l],
            [0.0, 0.0, 1.0],
        ])
    }

    /// Jacobian of [`Self::to_x_tilde`] with respect to `(λ, x2, x3)`.
    pub fn jacobian(&self, u: &Vec3) -> Result<Mat3, TransformError> {
        // Translation and shift have identity Jacobians.
        let r = self.rectify_jacobian(&self.to_y(u))?;
        let s = self.scales();
        let mut j = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                j[i][k] = s[i] * r[i][k];
            }
        }
        Ok(j)
    }

    /// Blow-up field in slow time: `(dλ/dt, ẋ2, ẋ3) = (f1/ε, f2, f3)`.
    pub fn blowup_velocity(&self, u: &Vec3) -> Vec3 {
        let p = &self.params;
        [
            p.f1(u[1], u[2], u[0]) / self.epsilon,
            p.f2(u[0]),
            p.f3(u[0]),
        ]
    }

    /// Blow-up field pushed through the chain, in time `t̃`.
    pub fn pushed_field(&self, u: &Vec3) -> Result<Vec3, TransformError> {
        let j = self.jacobian(u)?;
        let v = self.blowup_velocity(u);
        let t_sign = -self.sign_alpha();
        Ok([
            t_sign * dot(&j[0], &v),
            t_sign * dot(&j[1], &v),
            t_sign * dot(&j[2], &v),
        ])
    }

    /// Per-row remainders `(R1, R2, R3)` at `x̃`, rows scaled so each leading
    /// term is `O(|x̃|)`: `R3` is multiplied by `h`.
    pub fn remainders(&self, xt: &Vec3, h: f64) -> Result<Vec3, TransformError> {
        let u = self.from_x_tilde(xt)?;
        let d = self.pushed_field(&u)?;
        let k = &self.singularity.constants;
        let normal = folded_normal_field(k.a_tilde, k.b_tilde, k.c_tilde, xt);
        let fast_scale = self.epsilon / self.params.alpha.abs().sqrt();
        Ok([
            fast_scale * d[0] - normal[0],
            d[1] - normal[1],
            h * (d[2] - normal[2]),
        ])
    }
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Leading terms `(x̃2 + x̃1², b̃x̃3 + c̃x̃1, ã)`; the first row is in fast
/// time, the other two in slow time.
pub fn folded_normal_field(a_tilde: f64, b_tilde: f64, c_tilde: f64, x: &Vec3) -> Vec3 {
    [
        x[1] + x[0] * x[0],
        b_tilde * x[2] + c_tilde * x[0],
        a_tilde,
    ]
}

/// Directions on the unit sphere used for residual sampling.
pub fn sphere_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

pub const RESIDUAL_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub h: f64,
    pub residual: f64,
    /// Row-wise maxima of the scaled remainders.
    pub rows: Vec3,
}

/// Max scaled remainder over a sphere of radius `h` in `x̃`, with `ε = h`.
pub fn equivalence_residual(
    ctx: &TransformContext,
    h: f64,
) -> Result<ResidualSample, TransformError> {
    let ctx = ctx.with_epsilon(h)?;
    let mut rows = [0.0f64; 3];
    for d in sphere_directions(RESIDUAL_DIRECTIONS) {
        let xt = [h * d[0], h * d[1], h * d[2]];
        let r = ctx.remainders(&xt, h)?;
        for i in 0..3 {
            rows[i] = rows[i].max(r[i].abs());
        }
    }
    Ok(ResidualSample {
        h,
        residual: rows[0].max(rows[1]).max(rows[2]),
        rows,
    })
}

pub const DEFAULT_SCALES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const SLOPE_TARGET: f64 = 2.0;
pub const SLOPE_TOL: f64 = 0.1;
/// Largest [`TransformContext::curve_radius_ratio`] at which an order study is
/// considered inside its asymptotic regime.
pub const ASYMPTOTIC_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformCheck {
    pub h_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub pass: bool,
    pub lambda_s: f64,
    pub params: TwoFoldParams,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
}

/// Least-squares slope of `log r` against `log h`.
pub fn loglog_slope(h: &[f64], r: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn order_study(ctx: &TransformContext, scales: &[f64]) -> Result<TransformCheck, TransformError> {
    if scales.len() < 2 {
        return Err(TransformError::TooFewScales);
    }
    let residuals = scales
        .iter()
        .map(|&h| equivalence_residual(ctx, h).map(|s| s.residual))
        .collect::<Result<Vec<_>, _>>()?;
    let slope = loglog_slope(scales, &residuals);
    let k = &ctx.singularity.constants;
    Ok(TransformCheck {
        h_values: scales.to_vec(),
        residuals,
        slope,
        pass: (slope - SLOPE_TARGET).abs() <= SLOPE_TOL,
        lambda_s: ctx.singularity.lambda_s,
        params: ctx.params,
        a_tilde: k.a_tilde,
        b_tilde: k.b_tilde,
        c_tilde: k.c_tilde,
    })
}
