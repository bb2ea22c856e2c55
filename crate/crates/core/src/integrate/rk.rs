//! Dormand–Prince 5(4) with cubic Hermite dense output. All fields in
//! scope are autonomous, so stage times are not tracked.

use crate::field::Vec3;

use super::{IntegrationError, IntegratorOptions};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(x: &Vec3, terms: &[(f64, &Vec3)], h: f64) -> Vec3 {
    let mut out = *x;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One accepted step, enough to rebuild the cubic interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub x0: Vec3,
    pub x1: Vec3,
    pub d0: Vec3,
    pub d1: Vec3,
}

impl Segment {
    pub fn state(&self, t: f64) -> Vec3 {
        hermite(self, t).0
    }

    pub fn derivative(&self, t: f64) -> Vec3 {
        hermite(self, t).1
    }

    /// The same cubic restricted to `[t0, t]`.
    pub fn truncate(&self, t: f64) -> Segment {
        let (x, d) = hermite(self, t);
        Segment {
            t1: t,
            x1: x,
            d1: d,
            ..*self
        }
    }
}

/// Value and derivative of the cubic Hermite interpolant at `t`.
pub fn hermite(s: &Segment, t: f64) -> (Vec3, Vec3) {
    let h = s.t1 - s.t0;
    if h == 0.0 {
        return (s.x0, s.d0);
    }
    let th = (t - s.t0) / h;
    let th2 = th * th;
    let th3 = th2 * th;
    let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    let h10 = th3 - 2.0 * th2 + th;
    let h01 = -2.0 * th3 + 3.0 * th2;
    let h11 = th3 - th2;
    let dh00 = (6.0 * th2 - 6.0 * th) / h;
    let dh10 = 3.0 * th2 - 4.0 * th + 1.0;
    let dh01 = (-6.0 * th2 + 6.0 * th) / h;
    let dh11 = 3.0 * th2 - 2.0 * th;
    let mut x = [0.0; 3];
    let mut d = [0.0; 3];
    for i in 0..3 {
        x[i] = h00 * s.x0[i] + h10 * h * s.d0[i] + h01 * s.x1[i] + h11 * h * s.d1[i];
        d[i] = dh00 * s.x0[i] + dh10 * s.d0[i] + dh01 * s.x1[i] + dh11 * s.d1[i];
    }
    (x, d)
}

/// Trial step from `x` with `k1 = f(x)`: returns the 5th-order state, its
/// derivative, and the scaled error norm.
pub fn dp_trial<F: FnMut(&Vec3) -> Vec3>(
    f: &mut F,
    x: &Vec3,
    k1: &Vec3,
    h: f64,
    opts: &IntegratorOptions,
) -> (Vec3, Vec3, f64) {
    let k2 = f(&axpy(x, &[(A21, k1)], h));
    let k3 = f(&axpy(x, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(&axpy(x, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(&axpy(x, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(&axpy(
        x,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        h,
    ));
    let xn = axpy(
        x,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    let k7 = f(&xn);
    let mut acc = 0.0;
    for i in 0..3 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.abs_tol + opts.rel_tol * x[i].abs().max(xn[i].abs());
        acc += (e / sc) * (e / sc);
    }
    let err = (acc / 3.0).sqrt();
    let finite = xn.iter().chain(k7.iter()).all(|v| v.is_finite());
    (xn, k7, if finite && err.is_finite() { err } else { f64::INFINITY })
}

pub enum Advance {
    Step(Segment),
    /// The controller asked for a step below `min_step`.
    Floor,
}

/// Adaptive step controller state for one run.
pub struct Stepper {
    pub h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Stepper {
    pub fn new<F: FnMut(&Vec3) -> Vec3>(
        f: &mut F,
        x: &Vec3,
        span: f64,
        opts: &IntegratorOptions,
    ) -> Self {
        let d = f(x);
        let mut xs = 0.0f64;
        let mut ds = 0.0f64;
        for i in 0..3 {
            let sc = opts.abs_tol + opts.rel_tol * x[i].abs();
            xs = xs.max((x[i] / sc).abs());
            ds = ds.max((d[i] / sc).abs());
        }
        let mut h = if xs < 1e-5 || ds < 1e-5 || !ds.is_finite() {
            1e-6
        } else {
            0.01 * xs / ds
        };
        h = h.min(opts.max_step).min(span.abs()).max(opts.min_step);
        Stepper {
            h,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Takes one accepted step of at most `cap` from `(t, x)` with
    /// derivative `d`, never passing `t_end`.
    #[allow(clippy::too_many_arguments)]
    pub fn advance<F: FnMut(&Vec3) -> Vec3>(
        &mut self,
        f: &mut F,
        t: f64,
        x: &Vec3,
        d: &Vec3,
        t_end: f64,
        cap: f64,
        opts: &IntegratorOptions,
    ) -> Advance {
        let remaining = t_end - t;
        loop {
            let mut h = self.h.min(cap).min(opts.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let (xn, dn, err) = dp_trial(f, x, d, h, opts);
            if err <= 1.0 {
                self.accepted += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last || h >= self.h {
                    self.h = (h * factor).max(opts.min_step);
                }
                let t1 = if last { t_end } else { t + h };
                return Advance::Step(Segment {
                    t0: t,
                    t1,
                    x0: *x,
                    x1: xn,
                    d0: *d,
                    d1: dn,
                });
            }
            self.rejected += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            let next = h * factor;
            if next < opts.min_step {
                if last && remaining < opts.min_step {
                    // Sub-floor remainder of the span: take it unconditionally.
                    return Advance::Step(Segment {
                        t0: t,
                        t1: t_end,
                        x0: *x,
                        x1: xn,
                        d0: *d,
                        d1: dn,
                    });
                }
                return Advance::Floor;
            }
            self.h = next;
        }
    }
}

/// Points inside a segment at which event functions are scanned.
pub const SCAN_POINTS: usize = 4;

/// A detected event: index into the caller's list, time, and state.
#[derive(Debug, Clone, Copy)]
pub struct Located {
    pub index: usize,
    pub t: f64,
    pub x: Vec3,
}

/// Finds the earliest event on `seg`. Event `i` fires where `g_i` drops
/// below `-tol` after the segment start; the root is refined by bisection
/// on the interpolant until `|g_i| ≤ tol`.
pub fn locate_events<G: Fn(usize, &Vec3) -> f64>(
    seg: &Segment,
    count: usize,
    g: G,
    tol: &[f64],
) -> Result<Option<Located>, IntegrationError> {
    let mut best: Option<Located> = None;
    let h = seg.t1 - seg.t0;
    for (i, &tol_i) in tol.iter().enumerate().take(count) {
        let mut ta = seg.t0;
        for k in 1..=SCAN_POINTS {
            let tb = if k == SCAN_POINTS {
                seg.t1
            } else {
                seg.t0 + h * k as f64 / SCAN_POINTS as f64
            };
            if best.is_some_and(|b| b.t <= ta) {
                break;
            }
            let xb = if k == SCAN_POINTS { seg.x1 } else { seg.state(tb) };
            if g(i, &xb) < -tol_i {
                let (t, x) = bisect(seg, ta, tb, |x| g(i, x), tol_i)?;
                if best.map_or(true, |b| t < b.t) {
                    best = Some(Located { index: i, t, x });
                }
                break;
            }
            ta = tb;
        }
    }
    Ok(best)
}

pub const MAX_BISECTIONS: usize = 200;

fn bisect<G: Fn(&Vec3) -> f64>(
    seg: &Segment,
    mut a: f64,
    mut b: f64,
    g: G,
    tol: f64,
) -> Result<(f64, Vec3), IntegrationError> {
    for _ in 0..MAX_BISECTIONS {
        let m = 0.5 * (a + b);
        let xm = seg.state(m);
        let gm = g(&xm);
        if gm.abs() <= tol {
            return Ok((m, xm));
        }
        if m <= a || m >= b {
            // Interval exhausted in floating point; `b` is the first
            // representable time past the root.
            let xb = seg.state(b);
            if g(&xb).abs() <= tol.max(gm.abs()) {
                return Ok((b, xb));
            }
            return Ok((m, xm));
        }
        if gm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Err(IntegrationError::NonconvergentEvent {
        t: 0.5 * (a + b),
        iterations: MAX_BISECTIONS,
    })
}
