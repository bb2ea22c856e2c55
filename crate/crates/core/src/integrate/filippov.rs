//! Event-driven Filippov integration.
//!
//! Off the surface each side's field is integrated on its own. On the
//! surface the layer quadratic `f1(0, x2, x3; λ)` decides between crossing
//! and sliding; while sliding, `λ` follows one root of that quadratic,
//! selected by its stability so that the branch is tracked continuously.
//! Exits are located where the tracked root reaches `±1` or merges with
//! the other root (fold of the sliding manifold).

use crate::field::{LayerQuadratic, PiecewiseSmoothSystem, Vec3};
use crate::sliding::{layer_quadratic_of, quadratic_real_roots, quadratic_roots_in_unit, Stability};

use super::rk::Stepper;
use super::{
    check_inputs, finish, run_leg, EventKind, IntegrationError, IntegratorOptions, Leg, LegEnd,
    Mode, Orientation, RepellingPolicy, Termination, Trajectory, SURFACE_BAND, SURFACE_STEP_CAP,
};

/// Both one-sided normal components below this mark a two-fold hit.
pub const TWO_FOLD_TOL: f64 = 1e-8;

/// Bound on `|λ|` used when the tracked root leaves `[-1, 1]` inside a
/// trial step.
const LAMBDA_CLAMP: f64 = 1.5;

/// Consecutive zero-length legs tolerated before giving up.
const STALL_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Plus,
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    fn mode(self) -> Mode {
        match self {
            Side::Plus => Mode::FlowPlus,
            Side::Minus => Mode::FlowMinus,
        }
    }

    fn of(v: f64) -> Side {
        if v > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Flow(Side),
    Slide(Stability),
}

fn stability_of(slope: f64) -> Stability {
    if slope < 0.0 {
        Stability::Attracting
    } else {
        Stability::Repelling
    }
}

/// Root of `q` on the branch `stab`; falls back to the only root, then to
/// the vertex, so the value stays defined inside trial steps.
fn branch_root(q: &LayerQuadratic, stab: Stability) -> f64 {
    let roots = quadratic_real_roots(q);
    let pick = roots
        .iter()
        .find(|(r, _)| stability_of(q.derivative(*r)) == stab)
        .or_else(|| roots.first())
        .map(|(r, _)| *r)
        .unwrap_or(if q.a != 0.0 { -q.b / (2.0 * q.a) } else { 0.0 });
    pick.clamp(-LAMBDA_CLAMP, LAMBDA_CLAMP)
}

/// Discriminant scaled to `[-1, 1]`; `+1` where the layer is not quadratic.
fn scaled_discriminant(q: &LayerQuadratic) -> f64 {
    if q.a == 0.0 {
        return 1.0;
    }
    let bb = q.b * q.b;
    let ac = 4.0 * q.a * q.c;
    let size = bb + ac.abs();
    if size == 0.0 {
        0.0
    } else {
        (bb - ac) / size
    }
}

struct Engine<'a> {
    sys: &'a PiecewiseSmoothSystem,
    opts: &'a IntegratorOptions,
}

impl Engine<'_> {
    fn quadratic(&self, x: &Vec3) -> LayerQuadratic {
        layer_quadratic_of(self.sys, x[1], x[2])
    }

    fn flow_rhs(&self, side: Side, x: &Vec3) -> Vec3 {
        match side {
            Side::Plus => self.sys.f_plus.eval(x),
            Side::Minus => self.sys.f_minus.eval(x),
        }
    }

    fn slide_lambda(&self, stab: Stability, x: &Vec3) -> f64 {
        branch_root(&self.quadratic(x), stab)
    }

    fn slide_rhs(&self, stab: Stability, x: &Vec3) -> Vec3 {
        let lambda = self.slide_lambda(stab, x);
        let v = self.sys.combine(&[0.0, x[1], x[2]], lambda);
        [0.0, v[1], v[2]]
    }

    fn rhs(&self, phase: Phase, x: &Vec3) -> Vec3 {
        match phase {
            Phase::Flow(side) => self.flow_rhs(side, x),
            Phase::Slide(stab) => self.slide_rhs(stab, x),
        }
    }

    fn lambda(&self, phase: Phase, x: &Vec3) -> Option<f64> {
        match phase {
            Phase::Flow(_) => None,
            Phase::Slide(stab) => Some(self.slide_lambda(stab, x)),
        }
    }

    fn at_two_fold(&self, x: &Vec3) -> bool {
        let (p, m) = self.sys.normal_components(x[1], x[2]);
        p.abs() < TWO_FOLD_TOL && m.abs() < TWO_FOLD_TOL
    }

    /// Continuation on a repelling branch at time `t`.
    fn repelling(&self, t: f64) -> Phase {
        match self.opts.repelling_policy {
            RepellingPolicy::StaySliding => Phase::Slide(Stability::Repelling),
            RepellingPolicy::EjectPlus => Phase::Flow(Side::Plus),
            RepellingPolicy::EjectMinus => Phase::Flow(Side::Minus),
            RepellingPolicy::EjectAt(te) => {
                if t < te {
                    Phase::Slide(Stability::Repelling)
                } else {
                    Phase::Flow(Side::Plus)
                }
            }
        }
    }

    /// Decides what happens at a point of the surface reached from `from`
    /// (or started on, when `None`), logging the corresponding events.
    fn on_surface(&self, traj: &mut Trajectory, t: f64, x: &Vec3, from: Option<Side>) -> Phase {
        if self.at_two_fold(x) {
            traj.log(t, EventKind::TwoFoldHit, *x);
            traj.log(t, EventKind::DeterminacyBreak, *x);
        }
        let q = self.quadratic(x);
        let roots = quadratic_roots_in_unit(&q);
        let attracting = |r: f64| stability_of(q.derivative(r)) == Stability::Attracting;
        let phase = match from {
            // Coming down from λ = +1 the layer settles on the largest
            // root, coming up from -1 on the smallest; both attract.
            Some(Side::Plus) => match roots.last() {
                Some(_) => Phase::Slide(Stability::Attracting),
                None => Phase::Flow(Side::Minus),
            },
            Some(Side::Minus) => match roots.first() {
                Some(_) => Phase::Slide(Stability::Attracting),
                None => Phase::Flow(Side::Plus),
            },
            None => {
                if roots.iter().any(|(r, _)| attracting(*r)) {
                    Phase::Slide(Stability::Attracting)
                } else if !roots.is_empty() {
                    self.repelling(t)
                } else {
                    let (p, m) = self.sys.normal_components(x[1], x[2]);
                    Phase::Flow(Side::of(if p != 0.0 { p } else { m }))
                }
            }
        };
        if let Some(side) = from {
            match phase {
                Phase::Slide(_) => traj.log(t, EventKind::SlideEntry, *x),
                Phase::Flow(s) if s != side => traj.log(t, EventKind::Crossing, *x),
                Phase::Flow(_) => {}
            }
        }
        phase
    }
}

/// Filippov integration of `sys` from `x0` over `t_span`.
pub fn integrate_filippov(
    sys: &PiecewiseSmoothSystem,
    x0: Vec3,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    check_inputs(&x0, t_span, opts)?;
    let eng = Engine { sys, opts };
    let (t0, t_end) = t_span;

    let mut scratch = Trajectory::start(t0, x0, Mode::FlowPlus, None, [0.0; 3]);
    let mut phase = if x0[0] > 0.0 {
        Phase::Flow(Side::Plus)
    } else if x0[0] < 0.0 {
        Phase::Flow(Side::Minus)
    } else {
        eng.on_surface(&mut scratch, t0, &x0, None)
    };
    let mut x = x0;
    if let Phase::Slide(_) = phase {
        x[0] = 0.0;
    }
    let mode_of = |p: Phase| match p {
        Phase::Flow(s) => s.mode(),
        Phase::Slide(_) => Mode::Sliding,
    };
    let mut traj = Trajectory::start(t0, x, mode_of(phase), eng.lambda(phase, &x), eng.rhs(phase, &x));
    traj.events = scratch.events;

    let mut stepper = Stepper::new(&mut |y: &Vec3| eng.rhs(phase, y), &x, t_end - t0, opts);
    let mut t = t0;
    let mut stalls = 0usize;

    loop {
        let leg_start = t;
        let (end, te, xe, leg_end) = match phase {
            Phase::Flow(side) => {
                let s = side.sign();
                let mut leg = Leg {
                    f: |y: &Vec3| eng.flow_rhs(side, y),
                    g: move |_: usize, y: &Vec3| s * y[0],
                    orientation: &[Orientation::Positive],
                    cap: |y: &Vec3| {
                        if y[0].abs() < SURFACE_BAND {
                            SURFACE_STEP_CAP
                        } else {
                            f64::INFINITY
                        }
                    },
                    lambda: |_: &Vec3| None,
                    mode: side.mode(),
                };
                let (end, te, xe) = run_leg(&mut traj, &mut stepper, &mut leg, t, x, t_end, opts)?;
                (end, te, xe, t_end)
            }
            Phase::Slide(stab) => {
                let leg_end = match (stab, opts.repelling_policy) {
                    (Stability::Repelling, RepellingPolicy::EjectAt(te)) if te > t => te.min(t_end),
                    _ => t_end,
                };
                let mut leg = Leg {
                    f: |y: &Vec3| eng.slide_rhs(stab, y),
                    g: |i: usize, y: &Vec3| {
                        let q = eng.quadratic(y);
                        match i {
                            0 => 1.0 - branch_root(&q, stab),
                            1 => branch_root(&q, stab) + 1.0,
                            2 => scaled_discriminant(&q),
                            3 => sys.f_plus.components()[0].eval(&[0.0, y[1], y[2]]),
                            _ => sys.f_minus.components()[0].eval(&[0.0, y[1], y[2]]),
                        }
                    },
                    orientation: &[
                        Orientation::Positive,
                        Orientation::Positive,
                        Orientation::Positive,
                        Orientation::Either,
                        Orientation::Either,
                    ],
                    cap: |_: &Vec3| f64::INFINITY,
                    lambda: |y: &Vec3| Some(eng.slide_lambda(stab, y)),
                    mode: Mode::Sliding,
                };
                let (end, te, xe) =
                    run_leg(&mut traj, &mut stepper, &mut leg, t, x, leg_end, opts)?;
                (end, te, xe, leg_end)
            }
        };

        // Next phase and the derivative of the segment arriving at `xe`.
        let (new_phase, d_in) = match (end, phase) {
            (LegEnd::Event { arriving, .. }, Phase::Flow(side)) => {
                (eng.on_surface(&mut traj, te, &xe, Some(side)), arriving.d1)
            }
            (LegEnd::Event { hit, arriving }, Phase::Slide(stab)) => {
                (slide_event(&eng, &mut traj, stab, hit.index, te, &xe), arriving.d1)
            }
            (LegEnd::Reached, Phase::Slide(stab)) if leg_end < t_end => {
                // Scheduled ejection from a repelling branch.
                traj.log(te, EventKind::SlideExit, xe);
                (Phase::Flow(Side::Plus), eng.slide_rhs(stab, &xe))
            }
            (end, _) => {
                finish(&mut traj, end, te, xe);
                return Ok(traj);
            }
        };

        let mut xn = xe;
        if let Phase::Slide(_) = new_phase {
            xn[0] = 0.0;
        }
        traj.push_switch(
            te,
            xe,
            d_in,
            mode_of(new_phase),
            eng.lambda(new_phase, &xn),
            eng.rhs(new_phase, &xn),
        );
        phase = new_phase;
        x = xn;
        t = te;
        if te - leg_start <= 1e-13 * te.abs().max(1.0) {
            stalls += 1;
            if stalls > STALL_LIMIT {
                traj.termination = Termination::Stalled;
                return Ok(traj);
            }
        } else {
            stalls = 0;
        }
    }
}

/// Handles event `index` of a sliding leg at `(t, x)`.
fn slide_event(
    eng: &Engine<'_>,
    traj: &mut Trajectory,
    stab: Stability,
    index: usize,
    t: f64,
    x: &Vec3,
) -> Phase {
    let q = eng.quadratic(x);
    let lambda = branch_root(&q, stab);
    let near = |v: f64| (lambda - v).abs() <= 1e-9;
    if (index == 3 || index == 4) && eng.at_two_fold(x) {
        traj.log(t, EventKind::TwoFoldHit, *x);
        traj.log(t, EventKind::DeterminacyBreak, *x);
        // Past the two-fold the tracked root changes stability.
        let flipped = match stab {
            Stability::Attracting => Stability::Repelling,
            Stability::Repelling => Stability::Attracting,
        };
        return match flipped {
            Stability::Attracting => Phase::Slide(Stability::Attracting),
            Stability::Repelling => match eng.repelling(t) {
                Phase::Flow(side) => {
                    traj.log(t, EventKind::SlideExit, *x);
                    Phase::Flow(side)
                }
                p => p,
            },
        };
    }
    let exit = match index {
        0 => Some(Side::Plus),
        1 => Some(Side::Minus),
        2 => Some(Side::of(q.a)),
        3 if near(1.0) => Some(Side::Plus),
        4 if near(-1.0) => Some(Side::Minus),
        _ => None,
    };
    match exit {
        Some(side) => {
            traj.log(t, EventKind::SlideExit, *x);
            Phase::Flow(side)
        }
        // The other root crossed ±1: nothing changes for this branch.
        None => Phase::Slide(stab),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{normal_form_system, TwoFoldParams};

    fn nf(a1: f64, a2: f64, b1: f64, b2: f64, alpha: f64) -> PiecewiseSmoothSystem {
        normal_form_system(TwoFoldParams::new(a1, a2, b1, b2, alpha).unwrap())
    }

    #[test]
    fn attracting_slide_reaches_two_fold() {
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.0);
        let tr = integrate_filippov(&sys, [0.0, 1.0, 1.0], (0.0, 3.0), &Default::default()).unwrap();
        assert_eq!(tr.first().mode, Mode::Sliding);
        assert_eq!(tr.first().lambda, Some(0.0));
        let hit = tr.events_of(EventKind::TwoFoldHit).next().expect("two-fold hit");
        assert!(hit.x[1].abs() < TWO_FOLD_TOL && hit.x[2].abs() < TWO_FOLD_TOL);
        assert_eq!(tr.count_events(EventKind::DeterminacyBreak), 1);
        // λ follows (x3 - x2)/(x3 + x2) before the hit
        for s in tr.samples.iter().filter(|s| s.t < hit.t && s.mode == Mode::Sliding) {
            let expect = (s.x[2] - s.x[1]) / (s.x[2] + s.x[1]);
            assert!((s.lambda.unwrap() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn transverse_crossing() {
        let sys = nf(1.0, 1.0, -2.0, -2.0, 0.0);
        let tr = integrate_filippov(&sys, [0.1, 1.0, -1.0], (0.0, 0.2), &Default::default()).unwrap();
        let crossings: Vec<_> = tr.events_of(EventKind::Crossing).collect();
        assert_eq!(crossings.len(), 1);
        assert!(crossings[0].x[0].abs() <= 1e-12);
        assert_eq!(tr.last().mode, Mode::FlowMinus);
    }

    #[test]
    fn visible_slide_exits_at_lambda_plus_one() {
        // Visible, α = 0: λ = (x3 - x2)/(x3 + x2) on the attracting slide
        // x2, x3 > 0. From (0.5, 2) x2 falls to zero first, where λ = +1.
        let sys = nf(-1.0, -1.0, -1.0, 0.5, 0.0);
        let tr = integrate_filippov(&sys, [0.0, 0.5, 2.0], (0.0, 2.0), &Default::default()).unwrap();
        let exit = tr.events_of(EventKind::SlideExit).next().expect("slide exit");
        assert!(exit.x[1].abs() < 1e-9 && exit.x[2] > 0.5, "{exit:?}");
        let k = tr.samples.iter().position(|s| s.t == exit.t).unwrap();
        assert_eq!(tr.samples[k].mode, Mode::FlowPlus);
    }
}
