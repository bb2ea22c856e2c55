//! Time integration: smooth fields, Filippov switching with sliding,
//! sigmoid-smoothed switching, and the blown-up layer.

mod blowup;
mod filippov;
pub mod rk;
mod smoothed;
mod trajectory;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{SmoothField, Vec3};

pub use blowup::integrate_blowup;
pub use filippov::{integrate_filippov, TWO_FOLD_TOL};
pub use smoothed::integrate_smoothed;
pub use trajectory::{Event, EventKind, Mode, Sample, Termination, Trajectory};

use rk::{locate_events, Advance, Located, Segment, Stepper};

/// Steps are capped at [`SURFACE_STEP_CAP`] while `|x1| <` this.
pub const SURFACE_BAND: f64 = 0.01;
pub const SURFACE_STEP_CAP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("time span must be finite and increasing, got [{0}, {1}]")]
    InvalidSpan(f64, f64),
    #[error("initial state is not finite: {0:?}")]
    NonFinite(Vec3),
    #[error("ε must be positive, got {0}")]
    Epsilon(f64),
    #[error("initial λ = {0} lies outside [-1, 1]")]
    LambdaOutOfRange(f64),
    #[error("event bisection did not converge within {iterations} iterations near t = {t}")]
    NonconvergentEvent { t: f64, iterations: usize },
}

/// Continuation chosen on a repelling sliding branch, where forward
/// solutions are not unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RepellingPolicy {
    StaySliding,
    EjectPlus,
    EjectMinus,
    /// Slide until the given time, then leave into `x1 > 0`.
    EjectAt(f64),
}

impl FromStr for RepellingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stay" => Ok(RepellingPolicy::StaySliding),
            "eject-plus" => Ok(RepellingPolicy::EjectPlus),
            "eject-minus" => Ok(RepellingPolicy::EjectMinus),
            other => match other.strip_prefix("eject-at:") {
                Some(t) => t
                    .parse::<f64>()
                    .map(RepellingPolicy::EjectAt)
                    .map_err(|e| format!("bad ejection time {t:?}: {e}")),
                None => Err(format!(
                    "unknown policy {other:?} (expected stay, eject-plus, eject-minus, eject-at:<t>)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub event_tol: f64,
    pub repelling_policy: RepellingPolicy,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.1,
            min_step: 1e-12,
            event_tol: 1e-12,
            repelling_policy: RepellingPolicy::StaySliding,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("event_tol", self.event_tol),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(IntegrationError::InvalidOptions(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.min_step >= self.max_step {
            return Err(IntegrationError::InvalidOptions(format!(
                "min_step {} must be below max_step {}",
                self.min_step, self.max_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigmoid {
    Tanh,
    /// `s / √(1 + s²)`
    #[serde(rename = "sqrt")]
    AlgebraicSqrt,
}

impl Sigmoid {
    #[inline]
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Sigmoid::Tanh => s.tanh(),
            Sigmoid::AlgebraicSqrt => {
                if s.is_infinite() {
                    s.signum()
                } else {
                    s / (1.0 + s * s).sqrt()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sigmoid::Tanh => "tanh",
            Sigmoid::AlgebraicSqrt => "sqrt",
        }
    }
}

impl FromStr for Sigmoid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Sigmoid::Tanh),
            "sqrt" => Ok(Sigmoid::AlgebraicSqrt),
            other => Err(format!("unknown sigmoid {other:?} (expected tanh or sqrt)")),
        }
    }
}

pub(crate) fn check_inputs(
    x0: &Vec3,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<(), IntegrationError> {
    opts.validate()?;
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(IntegrationError::NonFinite(*x0));
    }
    let (a, b) = t_span;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(IntegrationError::InvalidSpan(a, b));
    }
    Ok(())
}

/// How a single-mode leg ended.
pub(crate) enum LegEnd {
    Reached,
    Event { hit: Located, arriving: Segment },
    Floor,
    MaxSteps,
}

/// Sign convention of an event function within a leg.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Orientation {
    /// Fires when the function drops below `-tol`.
    Positive,
    /// Fires on a sign change once the function has left the `±10 tol`
    /// band it may start in.
    Either,
}

pub(crate) struct Leg<'a, F, G, C, L> {
    pub f: F,
    pub g: G,
    pub orientation: &'a [Orientation],
    pub cap: C,
    pub lambda: L,
    pub mode: Mode,
}

/// Integrates one mode from `(t, x)` until `t_end` or the first event,
/// appending accepted samples to `traj`.
pub(crate) fn run_leg<F, G, C, L>(
    traj: &mut Trajectory,
    stepper: &mut Stepper,
    leg: &mut Leg<'_, F, G, C, L>,
    mut t: f64,
    mut x: Vec3,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<(LegEnd, f64, Vec3), IntegrationError>
where
    F: FnMut(&Vec3) -> Vec3,
    G: Fn(usize, &Vec3) -> f64,
    C: Fn(&Vec3) -> f64,
    L: Fn(&Vec3) -> Option<f64>,
{
    let n = leg.orientation.len();
    let tols = vec![opts.event_tol; n];
    let mut signs: Vec<Option<f64>> = leg
        .orientation
        .iter()
        .map(|o| match o {
            Orientation::Positive => Some(1.0),
            Orientation::Either => None,
        })
        .collect();
    let mut d = (leg.f)(&x);
    loop {
        if t >= t_end {
            return Ok((LegEnd::Reached, t, x));
        }
        if traj.accepted_steps >= opts.max_steps {
            return Ok((LegEnd::MaxSteps, t, x));
        }
        for (i, s) in signs.iter_mut().enumerate() {
            if s.is_none() {
                let v = (leg.g)(i, &x);
                if v.abs() > 10.0 * tols[i] {
                    *s = Some(v.signum());
                }
            }
        }
        let cap = (leg.cap)(&x);
        let seg = match stepper.advance(&mut leg.f, t, &x, &d, t_end, cap, opts) {
            Advance::Step(seg) => seg,
            Advance::Floor => return Ok((LegEnd::Floor, t, x)),
        };
        traj.accepted_steps = stepper.accepted;
        traj.rejected_steps = stepper.rejected;
        let armed = &signs;
        let hit = locate_events(
            &seg,
            n,
            |i, y| match armed[i] {
                Some(s) => s * (leg.g)(i, y),
                None => f64::INFINITY,
            },
            &tols,
        )?;
        if let Some(hit) = hit {
            let arriving = seg.truncate(hit.t);
            return Ok((LegEnd::Event { hit, arriving }, hit.t, hit.x));
        }
        traj.push_segment(&seg, leg.mode, (leg.lambda)(&seg.x1));
        t = seg.t1;
        x = seg.x1;
        d = seg.d1;
    }
}

/// Integrates a single smooth field.
pub fn integrate_smooth(
    field: &SmoothField,
    x0: Vec3,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    check_inputs(&x0, t_span, opts)?;
    let mut f = |x: &Vec3| field.eval(x);
    let mut stepper = Stepper::new(&mut f, &x0, t_span.1 - t_span.0, opts);
    let mut traj = Trajectory::start(t_span.0, x0, Mode::Smooth, None, f(&x0));
    let mut leg = Leg {
        f,
        g: |_: usize, _: &Vec3| 0.0,
        orientation: &[],
        cap: |_: &Vec3| f64::INFINITY,
        lambda: |_: &Vec3| None,
        mode: Mode::Smooth,
    };
    let (end, t, x) = run_leg(&mut traj, &mut stepper, &mut leg, t_span.0, x0, t_span.1, opts)?;
    finish(&mut traj, end, t, x);
    Ok(traj)
}

/// Records the termination of a run whose last leg ended with `end`.
pub(crate) fn finish(traj: &mut Trajectory, end: LegEnd, t: f64, x: Vec3) {
    traj.termination = match end {
        LegEnd::Reached => Termination::Completed,
        LegEnd::Floor => {
            traj.log(t, EventKind::StepFloor, x);
            Termination::StepFloor
        }
        LegEnd::MaxSteps => Termination::MaxSteps,
        LegEnd::Event { .. } => unreachable!("events are handled by the caller"),
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let f = SmoothField::constant([0.0, 0.0, 1.0]);
        let tr = integrate_smooth(&f, [0.0; 3], (0.0, 1.0), &IntegratorOptions::default()).unwrap();
        let x = tr.final_state();
        assert!(x[0].abs() < 1e-14 && x[1].abs() < 1e-14 && (x[2] - 1.0).abs() < 1e-12);
        assert_eq!(tr.termination, Termination::Completed);
    }

    #[test]
    fn harmonic_period() {
        let f = SmoothField::parse("x2", "-x1", "0").unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let tr = integrate_smooth(&f, [1.0, 0.0, 0.0], (0.0, tau), &IntegratorOptions::default())
            .unwrap();
        let x = tr.final_state();
        assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn tighter_tolerances_reduce_error() {
        let f = SmoothField::parse("x2", "-x1", "0").unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let mut last = f64::INFINITY;
        for k in 0..4 {
            let scale = 10f64.powi(-2 * k);
            let opts = IntegratorOptions {
                rel_tol: 1e-4 * scale,
                abs_tol: 1e-6 * scale,
                max_step: 10.0,
                ..Default::default()
            };
            let tr = integrate_smooth(&f, [1.0, 0.0, 0.0], (0.0, tau), &opts).unwrap();
            let x = tr.final_state();
            let err = (x[0] - 1.0).hypot(x[1]);
            assert!(err < last, "k={k}: {err} !< {last}");
            last = err;
        }
    }

    #[test]
    fn option_validation() {
        let bad = IntegratorOptions {
            min_step: 1.0,
            max_step: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorOptions {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(IntegratorOptions::default().validate().is_ok());
    }

    #[test]
    fn policy_and_sigmoid_parsing() {
        assert_eq!("stay".parse(), Ok(RepellingPolicy::StaySliding));
        assert_eq!("eject-at:2.5".parse(), Ok(RepellingPolicy::EjectAt(2.5)));
        assert!("sideways".parse::<RepellingPolicy>().is_err());
        assert_eq!("sqrt".parse(), Ok(Sigmoid::AlgebraicSqrt));
        assert_eq!(Sigmoid::AlgebraicSqrt.eval(f64::INFINITY), 1.0);
        assert!((Sigmoid::Tanh.eval(0.5) - 0.5f64.tanh()).abs() < 1e-16);
    }
}
