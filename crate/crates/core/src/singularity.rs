//! Two-fold flavours, folded singularities on `L`, and their classification.
//!
//! A folded singularity is a point of the fold curve `L` where the slow flow
//! projected onto `M^S` is indeterminate:
//!
//! ```text
//! f1 = ∂f1/∂λ = (f2, f3)·∂f1/∂(x2, x3) = 0
//! ```
//!
//! For the normal form its `λ` coordinate solves
//! `(a1-a2+b1-b2) λ² + 2(a1+a2) λ + (a1-a2) - (b1-b2) = 0`, a form that stays
//! valid when `b1 = b2`.

use serde::Serialize;
use thiserror::Error;

use crate::field::TwoFoldParams;

pub const ALPHA_TOL: f64 = 1e-9;
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingularityError {
    #[error("hidden coefficient α vanishes ({0}); the layer is degenerate")]
    AlphaZero(f64),
    #[error("folded singularity at λ_s = {0} lies on the boundary of [-1, 1]")]
    BoundarySingularity(f64),
    #[error("classification boundary: ãb̃ = {ab}, c̃² - 8ãb̃ = {disc}")]
    Degenerate { ab: f64, disc: f64 },
    #[error("prefactor 1/(-2x̃1) is singular at x̃1 = 0")]
    PrefactorSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    Visible,
    Invisible,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TwoFoldFlavor {
    pub tag: Flavor,
    pub determinacy_breaking: bool,
}

/// Flavour from the fold curvatures and whether canards make the flow
/// set-valued at the singularity. All inequalities are strict.
pub fn classify_two_fold(p: &TwoFoldParams) -> TwoFoldFlavor {
    let (b1, b2) = (p.b1, p.b2);
    let tag = if p.a1 < 0.0 && p.a2 < 0.0 {
        Flavor::Visible
    } else if p.a1 > 0.0 && p.a2 > 0.0 {
        Flavor::Invisible
    } else {
        Flavor::Mixed
    };
    let determinacy_breaking = match tag {
        Flavor::Invisible => b1 < 0.0 && b2 < 0.0 && b1 * b2 > 1.0,
        Flavor::Visible => b1 < 0.0 || b2 < 0.0 || b1 * b2 < 1.0,
        Flavor::Mixed => {
            (b1 < 0.0 && 0.0 < b2 && b1 * b2 < -1.0) || (b1 + b2 < 0.0 && b1 - b2 < -2.0)
        }
    };
    TwoFoldFlavor {
        tag,
        determinacy_breaking,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FoldedType {
    FoldedSaddle,
    FoldedNode,
    FoldedFocus,
    /// On a boundary of the strict classification inequalities.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CanardFlag {
    Canard,
    FauxCanard,
    Neutral,
}

impl CanardFlag {
    fn from_sign(v: f64) -> Self {
        if v > 0.0 {
            CanardFlag::Canard
        } else if v < 0.0 {
            CanardFlag::FauxCanard
        } else {
            CanardFlag::Neutral
        }
    }

    fn reversed(self) -> Self {
        match self {
            CanardFlag::Canard => CanardFlag::FauxCanard,
            CanardFlag::FauxCanard => CanardFlag::Canard,
            CanardFlag::Neutral => CanardFlag::Neutral,
        }
    }
}

/// Constants of the folded normal form at one singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldedConstants {
    pub f2s: f64,
    pub f3s: f64,
    /// `∂f2/∂λ` and `∂f3/∂λ`, constant for the normal form.
    pub df2s: f64,
    pub df3s: f64,
    pub c: f64,
    pub b: f64,
    pub d1: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
}

/// Complex eigenvalue as `[re, im]`.
pub type Eigenvalue = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldedClassification {
    pub folded_type: FoldedType,
    pub canard: CanardFlag,
    pub eigenvalues: [Eigenvalue; 2],
    pub trace: f64,
    pub det: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldedSingularity {
    pub lambda_s: f64,
    pub x2s: f64,
    pub x3s: f64,
    pub constants: FoldedConstants,
    pub folded_type: FoldedType,
    /// Sign of `c̃`, read in the rescaled time of the folded normal form.
    pub canard: CanardFlag,
    /// The same flag read in the original time, which the rescaling
    /// reverses when `α > 0`.
    pub canard_original_time: CanardFlag,
    pub eigenvalues: [Eigenvalue; 2],
    pub trace: f64,
    pub det: f64,
}

impl FoldedSingularity {
    /// JSON object with the flat key set used by reports.
    pub fn to_json(&self) -> serde_json::Value {
        let k = &self.constants;
        serde_json::json!({
            "lambda_s": self.lambda_s,
            "x2s": self.x2s,
            "x3s": self.x3s,
            "f2s": k.f2s,
            "f3s": k.f3s,
            "c": k.c,
            "b": k.b,
            "d1": k.d1,
            "a_tilde": k.a_tilde,
            "b_tilde": k.b_tilde,
            "c_tilde": k.c_tilde,
            "type": self.folded_type,
            "canard": self.canard,
            "canard_original_time": self.canard_original_time,
            "eigenvalues": self.eigenvalues,
            "trace": self.trace,
            "det": self.det,
        })
    }
}

/// Roots in `(-1, 1)` of the folded-singularity quadratic, ascending.
///
/// A zero discriminant only happens at `|b1 - b2| = 2` in the mixed case,
/// which is the excluded boundary of the existence region; it yields no root.
pub fn lambda_s_roots(p: &TwoFoldParams) -> Vec<f64> {
    let d = p.b1 - p.b2;
    let qa = p.a1 - p.a2 + d;
    let qb = 2.0 * (p.a1 + p.a2);
    let qc = (p.a1 - p.a2) - d;
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    let mut roots = Vec::with_capacity(2);
    if qa.abs() <= 1e-15 * scale {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let size = (qb * qb).max((4.0 * qa * qc).abs());
        if disc > 1e-14 * size {
            let sq = disc.sqrt();
            if qb != 0.0 {
                let t = -0.5 * (qb + qb.signum() * sq);
                roots.push(t / qa);
                roots.push(qc / t);
            } else {
                let r = sq / (2.0 * qa.abs());
                roots.push(-r);
                roots.push(r);
            }
        }
    }
    roots.retain(|r| r.is_finite() && (-1.0 - BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(r));
    roots.sort_by(f64::total_cmp);
    roots
}

/// All folded singularities of the perturbed normal form.
pub fn folded_singularities(p: &TwoFoldParams) -> Result<Vec<FoldedSingularity>, SingularityError> {
    if p.alpha.abs() <= ALPHA_TOL {
        return Err(SingularityError::AlphaZero(p.alpha));
    }
    let roots = lambda_s_roots(p);
    if let Some(&r) = roots
        .iter()
        .find(|r| (*r + 1.0).abs() <= BOUNDARY_TOL || (*r - 1.0).abs() <= BOUNDARY_TOL)
    {
        return Err(SingularityError::BoundarySingularity(r));
    }
    roots.into_iter().map(|l| folded_singularity_at(p, l)).collect()
}

/// Builds the singularity record at a known `λ_s`.
pub fn folded_singularity_at(
    p: &TwoFoldParams,
    lambda_s: f64,
) -> Result<FoldedSingularity, SingularityError> {
    let constants = folded_constants(p, lambda_s)?;
    let (folded_type, canard, eigenvalues, trace, det) =
        match folded_type(constants.a_tilde, constants.b_tilde, constants.c_tilde) {
            Ok(c) => (c.folded_type, c.canard, c.eigenvalues, c.trace, c.det),
            Err(SingularityError::Degenerate { .. }) => {
                let (trace, det, eigenvalues) =
                    linear_invariants(constants.a_tilde, constants.b_tilde, constants.c_tilde);
                (
                    FoldedType::Degenerate,
                    CanardFlag::from_sign(constants.c_tilde),
                    eigenvalues,
                    trace,
                    det,
                )
            }
            Err(e) => return Err(e),
        };
    let canard_original_time = if p.alpha > 0.0 {
        canard.reversed()
    } else {
        canard
    };
    Ok(FoldedSingularity {
        lambda_s,
        x2s: p.alpha * (lambda_s - 1.0) * (lambda_s - 1.0),
        x3s: -p.alpha * (lambda_s + 1.0) * (lambda_s + 1.0),
        constants,
        folded_type,
        canard,
        canard_original_time,
        eigenvalues,
        trace,
        det,
    })
}

/// Constants `f2s, f3s, c, b, d1` and `ã, b̃, c̃` at `λ_s`.
///
/// `b̃` is the coefficient of `x̃3` in the second row of the folded normal
/// form reached by the translation/rectification/scaling chain in
/// [`crate::transform`]; it carries a `1/(1+λ_s)` factor from the slope of
/// the rectified curve.
pub fn folded_constants(
    p: &TwoFoldParams,
    lambda_s: f64,
) -> Result<FoldedConstants, SingularityError> {
    if p.alpha.abs() <= ALPHA_TOL {
        return Err(SingularityError::AlphaZero(p.alpha));
    }
    let one_plus = 1.0 + lambda_s;
    if one_plus.abs() <= BOUNDARY_TOL {
        return Err(SingularityError::BoundarySingularity(lambda_s));
    }
    let (a1, a2, b1, b2) = (p.a1, p.a2, p.b1, p.b2);
    let df2s = 0.5 * (a1 - b2);
    let df3s = 0.5 * (b1 - a2);
    let f2s = 0.5 * (a1 + b2) + df2s * lambda_s;
    let f3s = 0.5 * (b1 + a2) + df3s * lambda_s;
    let c = df2s - (1.0 - lambda_s) / one_plus * df3s;
    let b = -0.5 * ((f2s + f3s) / one_plus + c);
    let d1 = -0.5 * one_plus;
    let root_alpha = p.alpha.abs().sqrt();
    let c_tilde = -((lambda_s + 1.0) * df2s + (lambda_s - 1.0) * df3s) / (2.0 * root_alpha);
    let b_tilde = -(f2s + f3s - 2.0 * c_tilde * root_alpha) / (4.0 * p.alpha.abs() * one_plus);
    Ok(FoldedConstants {
        f2s,
        f3s,
        df2s,
        df3s,
        c,
        b,
        d1,
        a_tilde: f3s,
        b_tilde,
        c_tilde,
    })
}

fn linear_invariants(a: f64, b: f64, c: f64) -> (f64, f64, [Eigenvalue; 2]) {
    let trace = c;
    let det = 2.0 * a * b;
    let disc = c * c - 8.0 * a * b;
    let eig = if disc >= 0.0 {
        let s = disc.sqrt();
        [[0.5 * (c - s), 0.0], [0.5 * (c + s), 0.0]]
    } else {
        let s = (-disc).sqrt();
        [[0.5 * c, -0.5 * s], [0.5 * c, 0.5 * s]]
    };
    (trace, det, eig)
}

/// Type of the desingularized slow flow with Jacobian `[[c̃, b̃], [-2ã, 0]]`.
pub fn folded_type(
    a_tilde: f64,
    b_tilde: f64,
    c_tilde: f64,
) -> Result<FoldedClassification, SingularityError> {
    let ab = a_tilde * b_tilde;
    let disc = c_tilde * c_tilde - 8.0 * ab;
    if ab == 0.0 || disc == 0.0 {
        return Err(SingularityError::Degenerate { ab, disc });
    }
    let folded_type = if ab < 0.0 {
        FoldedType::FoldedSaddle
    } else if disc > 0.0 {
        FoldedType::FoldedNode
    } else {
        FoldedType::FoldedFocus
    };
    let (trace, det, eigenvalues) = linear_invariants(a_tilde, b_tilde, c_tilde);
    Ok(FoldedClassification {
        folded_type,
        canard: CanardFlag::from_sign(c_tilde),
        eigenvalues,
        trace,
        det,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowProjection {
    /// `[[c̃, b̃], [-2ã, 0]] · (x̃1, x̃3)`.
    pub linear: [f64; 2],
    /// `1/(-2x̃1)`; dropping it desingularizes and reverses time where
    /// it is negative.
    pub prefactor: f64,
}

pub fn slow_projection_field(
    a_tilde: f64,
    b_tilde: f64,
    c_tilde: f64,
    x1: f64,
    x3: f64,
) -> Result<SlowProjection, SingularityError> {
    if x1 == 0.0 {
        return Err(SingularityError::PrefactorSingular);
    }
    Ok(SlowProjection {
        linear: [c_tilde * x1 + b_tilde * x3, -2.0 * a_tilde * x1],
        prefactor: 1.0 / (-2.0 * x1),
    })
}

/// The three indeterminacy conditions evaluated at `(λ, x2, x3)`.
pub fn indeterminacy_residuals(p: &TwoFoldParams, lambda: f64, x2: f64, x3: f64) -> [f64; 3] {
    let dot = p.f2(lambda) * (-0.5 * (1.0 + lambda)) + p.f3(lambda) * (0.5 * (1.0 - lambda));
    [p.f1(x2, x3, lambda), p.df1_dlambda(x2, x3, lambda), dot]
}
