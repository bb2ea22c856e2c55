//! The blown-up layer `ε dλ/dt = f1`, `(ẋ2, ẋ3) = (f2, f3)`.

use crate::field::{TwoFoldParams, Vec3};

use super::rk::Stepper;
use super::{
    check_inputs, finish, run_leg, EventKind, IntegrationError, IntegratorOptions, Leg, LegEnd,
    Mode, Orientation, Termination, Trajectory,
};

/// Integrates the layer from `(λ0, x20, x30)`. The state is stored as
/// `(λ, x2, x3)`. Reaching `λ = ±1` with `f1` pointing out of the layer
/// ends the run with a boundary exit; an inward-pointing boundary is kept.
pub fn integrate_blowup(
    p: &TwoFoldParams,
    epsilon: f64,
    u0: Vec3,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    check_inputs(&u0, t_span, opts)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(IntegrationError::Epsilon(epsilon));
    }
    if !(-1.0..=1.0).contains(&u0[0]) {
        return Err(IntegrationError::LambdaOutOfRange(u0[0]));
    }
    let rhs = |u: &Vec3| [p.f1(u[1], u[2], u[0]) / epsilon, p.f2(u[0]), p.f3(u[0])];
    let outward = |u: &Vec3| {
        let f1 = p.f1(u[1], u[2], u[0]);
        (u[0] >= 1.0 && f1 > 0.0) || (u[0] <= -1.0 && f1 < 0.0)
    };
    let (t0, t_end) = t_span;
    let mut traj = Trajectory::start(t0, u0, Mode::Layer, Some(u0[0]), rhs(&u0));
    if outward(&u0) {
        traj.log(t0, EventKind::BoundaryExit, u0);
        traj.termination = Termination::BoundaryExit;
        return Ok(traj);
    }
    let mut stepper = Stepper::new(&mut |u: &Vec3| rhs(u), &u0, t_end - t0, opts);
    let (mut t, mut u) = (t0, u0);
    loop {
        let mut leg = Leg {
            f: rhs,
            g: |i: usize, y: &Vec3| if i == 0 { 1.0 - y[0] } else { 1.0 + y[0] },
            orientation: &[Orientation::Positive, Orientation::Positive],
            cap: |_: &Vec3| f64::INFINITY,
            lambda: |y: &Vec3| Some(y[0]),
            mode: Mode::Layer,
        };
        let (end, te, ue) = run_leg(&mut traj, &mut stepper, &mut leg, t, u, t_end, opts)?;
        match end {
            LegEnd::Event { hit, arriving } => {
                let mut ub = ue;
                ub[0] = if hit.index == 0 { 1.0 } else { -1.0 };
                traj.push_switch(te, ub, arriving.d1, Mode::Layer, Some(ub[0]), rhs(&ub));
                if outward(&ub) {
                    traj.log(te, EventKind::BoundaryExit, ub);
                    traj.termination = Termination::BoundaryExit;
                    return Ok(traj);
                }
                t = te;
                u = ub;
            }
            end => {
                finish(&mut traj, end, te, ue);
                return Ok(traj);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relaxes_to_sliding_root() {
        let p = TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap();
        let eps = 1e-3;
        let tr = integrate_blowup(&p, eps, [0.0, 1.0, 1.0], (0.0, 0.05), &Default::default()).unwrap();
        // f1 = -0.2λ² - λ + 0.2 at (1, 1); fast rate |∂f1/∂λ| ≈ 1.
        let root = (-1.0 + (1.0f64 + 0.16).sqrt()) / 0.4;
        let by = tr.state_at(eps * 30.0).unwrap();
        assert!((by[0] - root).abs() < 0.02, "{by:?} vs {root}");
    }

    #[test]
    fn degenerate_layer_is_stationary_in_lambda() {
        let p = TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.0).unwrap();
        for &l0 in &[-0.9, -0.3, 0.0, 0.5, 1.0] {
            let tr = integrate_blowup(&p, 1e-3, [l0, 0.0, 0.0], (0.0, 1e-9), &Default::default())
                .unwrap();
            assert_eq!(tr.first().d_out[0], 0.0);
            assert!((tr.final_state()[0] - l0).abs() < 1e-12);
        }
    }

    #[test]
    fn outward_boundary_terminates() {
        // At λ = 1 with x2 < 0: f1 = -x2 > 0 points out of the layer.
        let p = TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.0).unwrap();
        let tr = integrate_blowup(&p, 1e-2, [1.0, -1.0, 0.0], (0.0, 1.0), &Default::default()).unwrap();
        assert_eq!(tr.termination, Termination::BoundaryExit);
        assert_eq!(tr.len(), 1);
        let tr = integrate_blowup(&p, 1e-2, [0.5, -1.0, -1.0], (0.0, 1.0), &Default::default()).unwrap();
        assert_eq!(tr.termination, Termination::BoundaryExit);
        assert_eq!(tr.final_state()[0].abs(), 1.0);
    }

    #[test]
    fn rejects_lambda_outside_layer() {
        let p = TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap();
        let r = integrate_blowup(&p, 1e-3, [1.5, 0.0, 0.0], (0.0, 1.0), &Default::default());
        assert!(matches!(r, Err(IntegrationError::LambdaOutOfRange(_))));
    }
}
