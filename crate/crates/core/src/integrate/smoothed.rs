//! Sigmoid regularization: `λ = φ(x1/ε)` in the combined field.

use crate::field::{PiecewiseSmoothSystem, Vec3};

use super::rk::Stepper;
use super::{
    check_inputs, finish, run_leg, EventKind, IntegrationError, IntegratorOptions, Leg, LegEnd,
    Mode, Orientation, Sigmoid, Trajectory, SURFACE_BAND, SURFACE_STEP_CAP,
};

/// Integrates the smooth field `combine(x, φ(x1/ε))`. Samples are labelled
/// by the sign of `x1`, and each sign change is logged as a crossing.
pub fn integrate_smoothed(
    sys: &PiecewiseSmoothSystem,
    sigmoid: Sigmoid,
    epsilon: f64,
    x0: Vec3,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    check_inputs(&x0, t_span, opts)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(IntegrationError::Epsilon(epsilon));
    }
    let rhs = |x: &Vec3| sys.combine(x, sigmoid.eval(x[0] / epsilon));
    let side = |x: &Vec3| {
        let v = if x[0] != 0.0 { x[0] } else { rhs(x)[0] };
        if v >= 0.0 {
            Mode::FlowPlus
        } else {
            Mode::FlowMinus
        }
    };
    let (t0, t_end) = t_span;
    let mut mode = side(&x0);
    let mut traj = Trajectory::start(t0, x0, mode, None, rhs(&x0));
    let mut stepper = Stepper::new(&mut |y: &Vec3| rhs(y), &x0, t_end - t0, opts);
    let (mut t, mut x) = (t0, x0);
    loop {
        let mut leg = Leg {
            f: rhs,
            g: |_: usize, y: &Vec3| y[0],
            orientation: &[Orientation::Either],
            cap: |y: &Vec3| {
                if y[0].abs() < SURFACE_BAND {
                    SURFACE_STEP_CAP
                } else {
                    f64::INFINITY
                }
            },
            lambda: |_: &Vec3| None,
            mode,
        };
        let (end, te, xe) = run_leg(&mut traj, &mut stepper, &mut leg, t, x, t_end, opts)?;
        match end {
            LegEnd::Event { arriving, .. } => {
                mode = match mode {
                    Mode::FlowPlus => Mode::FlowMinus,
                    _ => Mode::FlowPlus,
                };
                traj.log(te, EventKind::Crossing, xe);
                traj.push_switch(te, xe, arriving.d1, mode, None, rhs(&xe));
                t = te;
                x = xe;
            }
            end => {
                finish(&mut traj, end, te, xe);
                return Ok(traj);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{normal_form_system, TwoFoldParams};

    #[test]
    fn saturated_sigmoid_matches_one_sided_fields() {
        let sys = normal_form_system(TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap());
        let eps = 1e-3;
        for sig in [Sigmoid::Tanh, Sigmoid::AlgebraicSqrt] {
            for &x1 in &[0.05, -0.05, 1.0, -2.0] {
                let x = [x1, 0.3, -0.7];
                let smoothed = sys.combine(&x, sig.eval(x1 / eps));
                let exact = sys.eval_piecewise(&x).unwrap();
                let tol = if sig == Sigmoid::Tanh { 1e-8 } else { 1e-3 };
                for i in 0..3 {
                    assert!((smoothed[i] - exact[i]).abs() < tol, "{sig:?} {x1}");
                }
            }
        }
    }

    #[test]
    fn crossings_are_logged_and_located() {
        let sys = normal_form_system(TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap());
        let tr = integrate_smoothed(
            &sys,
            Sigmoid::Tanh,
            1e-3,
            [0.1, 1.0, -1.0],
            (0.0, 0.3),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(tr.count_events(EventKind::Crossing), 1);
        let e = tr.events[0];
        assert!(e.x[0].abs() <= 1e-12);
        assert_eq!(tr.last().mode, Mode::FlowMinus);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let sys = normal_form_system(TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap());
        let r = integrate_smoothed(&sys, Sigmoid::Tanh, 0.0, [0.1; 3], (0.0, 1.0), &Default::default());
        assert!(matches!(r, Err(IntegrationError::Epsilon(_))));
    }
}
