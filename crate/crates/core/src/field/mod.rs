//! Smooth and piecewise-smooth vector fields on R³ with switching surface
//! `x1 = 0`.
//!
//! A [`PiecewiseSmoothSystem`] holds the two one-sided fields and a hidden
//! field `g`, combined for `λ ∈ [-1, 1]` as
//!
//! ```text
//! f(x; λ) = (1+λ)/2 · f⁺(x) + (1-λ)/2 · f⁻(x) + (1-λ²) · g(x)
//! ```
//!
//! so that `λ = ±1` recovers `f±` exactly and `g` only acts inside the
//! switching layer.

pub mod expr;

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Expr, ParseError, Rational};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("component {component}: {source}")]
    Parse {
        component: usize,
        #[source]
        source: ParseError,
    },
    #[error("switching parameter λ = {0} lies outside [-1, 1]")]
    LambdaOutOfRange(f64),
    #[error("x1 = 0 lies on the switching surface; the one-sided field is ambiguous")]
    OnSwitchingSurface,
    #[error("a{index} = {value} must be ±1")]
    InvalidSign { index: usize, value: f64 },
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
}

/// A vector field R³ → R³ given by three expressions in `x1, x2, x3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    components: [Expr; 3],
}

impl SmoothField {
    pub fn new(components: [Expr; 3]) -> Self {
        SmoothField { components }
    }

    pub fn parse(e1: &str, e2: &str, e3: &str) -> Result<Self, FieldError> {
        let p = |i: usize, s: &str| {
            Expr::parse(s).map_err(|source| FieldError::Parse {
                component: i + 1,
                source,
            })
        };
        Ok(SmoothField {
            components: [p(0, e1)?, p(1, e2)?, p(2, e3)?],
        })
    }

    pub fn zero() -> Self {
        let z = || Expr::constant(Rational::from_integer(0));
        SmoothField::new([z(), z(), z()])
    }

    /// Constant field with each coordinate stored as a rational.
    pub fn constant(v: Vec3) -> Self {
        SmoothField::new(v.map(|c| Expr::constant(rational_from_f64(c))))
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        [
            self.components[0].eval(x),
            self.components[1].eval(x),
            self.components[2].eval(x),
        ]
    }

    /// Printed components, each re-parseable by [`SmoothField::parse`].
    pub fn to_strings(&self) -> [String; 3] {
        [
            self.components[0].to_string(),
            self.components[1].to_string(),
            self.components[2].to_string(),
        ]
    }
}

impl fmt::Display for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.components;
        write!(f, "({a}, {b}, {c})")
    }
}

/// Normal-form constants of the two-fold with hidden coefficient `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFoldParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub alpha: f64,
}

impl TwoFoldParams {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64, alpha: f64) -> Result<Self, FieldError> {
        for (index, value) in [(1, a1), (2, a2)] {
            if value != 1.0 && value != -1.0 {
                return Err(FieldError::InvalidSign { index, value });
            }
        }
        for (name, value) in [("b1", b1), ("b2", b2), ("alpha", alpha)] {
            if !value.is_finite() {
                return Err(FieldError::NonFinite { name, value });
            }
        }
        Ok(TwoFoldParams {
            a1,
            a2,
            b1,
            b2,
            alpha,
        })
    }

    /// `f1(0, x2, x3; λ)` of the normal form.
    #[inline]
    pub fn f1(&self, x2: f64, x3: f64, lambda: f64) -> f64 {
        -0.5 * (1.0 + lambda) * x2 + 0.5 * (1.0 - lambda) * x3 + self.alpha * (1.0 - lambda * lambda)
    }

    #[inline]
    pub fn f2(&self, lambda: f64) -> f64 {
        0.5 * (1.0 + lambda) * self.a1 + 0.5 * (1.0 - lambda) * self.b2
    }

    #[inline]
    pub fn f3(&self, lambda: f64) -> f64 {
        0.5 * (1.0 + lambda) * self.b1 + 0.5 * (1.0 - lambda) * self.a2
    }

    /// `∂f1/∂λ` at `(0, x2, x3; λ)`.
    #[inline]
    pub fn df1_dlambda(&self, x2: f64, x3: f64, lambda: f64) -> f64 {
        -0.5 * (x2 + x3) - 2.0 * self.alpha * lambda
    }
}

/// The pair `(f⁺, f⁻)` plus hidden field `g`, switching on `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSmoothSystem {
    pub f_plus: SmoothField,
    pub f_minus: SmoothField,
    pub hidden: SmoothField,
    /// Set when the system was built from normal-form constants; enables
    /// closed-form sliding and two-fold detection.
    pub normal_form: Option<TwoFoldParams>,
}

/// `f1(0, x2, x3; λ) = a λ² + b λ + c`, exact for every system in scope
/// because `g` does not depend on `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LayerQuadratic {
    #[inline]
    pub fn eval(&self, lambda: f64) -> f64 {
        (self.a * lambda + self.b) * lambda + self.c
    }

    #[inline]
    pub fn derivative(&self, lambda: f64) -> f64 {
        2.0 * self.a * lambda + self.b
    }

    #[inline]
    pub fn second_derivative(&self) -> f64 {
        2.0 * self.a
    }
}

impl PiecewiseSmoothSystem {
    pub fn new(f_plus: SmoothField, f_minus: SmoothField, hidden: SmoothField) -> Self {
        PiecewiseSmoothSystem {
            f_plus,
            f_minus,
            hidden,
            normal_form: None,
        }
    }

    /// Combined field for `λ ∈ [-1, 1]`.
    pub fn eval_combination(&self, x: &Vec3, lambda: f64) -> Result<Vec3, FieldError> {
        if !(-1.0..=1.0).contains(&lambda) {
            return Err(FieldError::LambdaOutOfRange(lambda));
        }
        Ok(self.combine(x, lambda))
    }

    /// Unchecked combination; callers guarantee `λ ∈ [-1, 1]` or accept the
    /// polynomial extension outside it.
    #[inline]
    pub fn combine(&self, x: &Vec3, lambda: f64) -> Vec3 {
        if lambda == 1.0 {
            return self.f_plus.eval(x);
        }
        if lambda == -1.0 {
            return self.f_minus.eval(x);
        }
        let p = self.f_plus.eval(x);
        let m = self.f_minus.eval(x);
        let g = self.hidden.eval(x);
        let wp = 0.5 * (1.0 + lambda);
        let wm = 0.5 * (1.0 - lambda);
        let wg = 1.0 - lambda * lambda;
        [
            wp * p[0] + wm * m[0] + wg * g[0],
            wp * p[1] + wm * m[1] + wg * g[1],
            wp * p[2] + wm * m[2] + wg * g[2],
        ]
    }

    /// One-sided field `f(x; sign(x1))`.
    pub fn eval_piecewise(&self, x: &Vec3) -> Result<Vec3, FieldError> {
        if x[0] > 0.0 {
            Ok(self.f_plus.eval(x))
        } else if x[0] < 0.0 {
            Ok(self.f_minus.eval(x))
        } else {
            Err(FieldError::OnSwitchingSurface)
        }
    }

    /// Normal component `f1(0, x2, x3; ·)` as a polynomial in `λ`.
    pub fn layer_quadratic(&self, x2: f64, x3: f64) -> LayerQuadratic {
        let x = [0.0, x2, x3];
        let p = self.f_plus.components()[0].eval(&x);
        let m = self.f_minus.components()[0].eval(&x);
        let g = self.hidden.components()[0].eval(&x);
        LayerQuadratic {
            a: -g,
            b: 0.5 * (p - m),
            c: 0.5 * (p + m) + g,
        }
    }

    /// `(f1(0,x2,x3;+1), f1(0,x2,x3;-1))`, the one-sided normal components.
    pub fn normal_components(&self, x2: f64, x3: f64) -> (f64, f64) {
        let x = [0.0, x2, x3];
        (
            self.f_plus.components()[0].eval(&x),
            self.f_minus.components()[0].eval(&x),
        )
    }
}

/// Normal form `f⁺ = (-x2, a1, b1)`, `f⁻ = (x3, b2, a2)`, `g = (α, 0, 0)`.
pub fn normal_form_system(p: TwoFoldParams) -> PiecewiseSmoothSystem {
    let c = |v: f64| Expr::constant(rational_from_f64(v));
    let neg_x2 = Expr::Neg(Box::new(Expr::var(1)));
    PiecewiseSmoothSystem {
        f_plus: SmoothField::new([neg_x2, c(p.a1), c(p.b1)]),
        f_minus: SmoothField::new([Expr::var(2), c(p.b2), c(p.a2)]),
        hidden: SmoothField::new([c(p.alpha), c(0.0), c(0.0)]),
        normal_form: Some(p),
    }
}

/// Rational whose `f64` value is exactly `v`.
///
/// Prefers the shortest decimal that round-trips (so `0.2` becomes `1/5`),
/// falling back to the exact binary fraction.
pub fn rational_from_f64(v: f64) -> Rational {
    assert!(v.is_finite(), "non-finite constant {v}");
    if let Some(r) = shortest_decimal(v) {
        return r;
    }
    Ratio::<i64>::approximate_float(v)
        .filter(|r| expr::rational_to_f64(r) == v)
        .or_else(|| Ratio::<i64>::approximate_float(v))
        .unwrap_or_else(|| Rational::from_integer(0))
}

fn shortest_decimal(v: f64) -> Option<Rational> {
    let s = format!("{v}");
    let e = Expr::parse(&s).ok()?;
    let r = e.fold_const()?;
    (expr::rational_to_f64(&r) == v).then_some(r)
}
