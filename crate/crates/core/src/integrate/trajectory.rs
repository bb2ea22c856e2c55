use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::field::Vec3;

use super::rk::{hermite, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    FlowPlus,
    FlowMinus,
    Sliding,
    /// Inside the blown-up layer; the state is `(λ, x2, x3)`.
    Layer,
    /// Single smooth field, no switching surface.
    Smooth,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::FlowPlus => "FlowPlus",
            Mode::FlowMinus => "FlowMinus",
            Mode::Sliding => "Sliding",
            Mode::Layer => "Layer",
            Mode::Smooth => "Smooth",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Crossing,
    SlideEntry,
    SlideExit,
    TwoFoldHit,
    DeterminacyBreak,
    StepFloor,
    /// Layer run reached `λ = ±1` with the flow pointing outward.
    BoundaryExit,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub x: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec3,
    pub mode: Mode,
    /// Sliding value or layer coordinate; `None` elsewhere.
    pub lambda: Option<f64>,
    /// Derivative of the segment arriving at this sample.
    pub d_in: Vec3,
    /// Derivative of the segment leaving this sample.
    pub d_out: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Completed,
    StepFloor,
    BoundaryExit,
    MaxSteps,
    /// Repeated events without progress in time.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub seed: Option<u64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub(crate) fn start(t: f64, x: Vec3, mode: Mode, lambda: Option<f64>, d: Vec3) -> Self {
        Trajectory {
            samples: vec![Sample {
                t,
                x,
                mode,
                lambda,
                d_in: d,
                d_out: d,
            }],
            events: Vec::new(),
            termination: Termination::Completed,
            seed: None,
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    /// Appends the end of `seg` in `mode`.
    pub(crate) fn push_segment(&mut self, seg: &Segment, mode: Mode, lambda: Option<f64>) {
        self.samples.push(Sample {
            t: seg.t1,
            x: seg.x1,
            mode,
            lambda,
            d_in: seg.d1,
            d_out: seg.d1,
        });
    }

    /// Records a state where the mode changes. If the time equals the last
    /// sample's, that sample is updated in place to keep `t` strictly
    /// increasing.
    pub(crate) fn push_switch(
        &mut self,
        t: f64,
        x: Vec3,
        d_in: Vec3,
        mode: Mode,
        lambda: Option<f64>,
        d_out: Vec3,
    ) {
        let last = self.samples.last_mut().expect("trajectory has a start sample");
        if t <= last.t {
            last.mode = mode;
            last.lambda = lambda;
            last.d_out = d_out;
            return;
        }
        self.samples.push(Sample {
            t,
            x,
            mode,
            lambda,
            d_in,
            d_out,
        });
    }

    pub(crate) fn log(&mut self, t: f64, kind: EventKind, x: Vec3) {
        self.events.push(Event { t, kind, x });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has a start sample")
    }

    pub fn final_state(&self) -> Vec3 {
        self.last().x
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    /// Dense output at `t`, or `None` outside the run.
    pub fn state_at(&self, t: f64) -> Option<Vec3> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > self.t_end() || t.is_nan() {
            return None;
        }
        let k = s.partition_point(|p| p.t <= t);
        if k == 0 {
            return Some(s[0].x);
        }
        let a = &s[k - 1];
        if a.t == t || k == s.len() {
            return Some(a.x);
        }
        let b = &s[k];
        let seg = Segment {
            t0: a.t,
            t1: b.t,
            x0: a.x,
            x1: b.x,
            d0: a.d_out,
            d1: b.d_in,
        };
        Some(hermite(&seg, t).0)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count_events(&self, kind: EventKind) -> usize {
        self.events_of(kind).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.x.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sign changes of the first coordinate between consecutive samples.
    pub fn sign_changes_x1(&self) -> usize {
        let signs: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.x[0])
            .filter(|v| *v != 0.0)
            .map(f64::signum)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Times the sup-norm drops below `radius` after having been outside.
    pub fn ball_entries(&self, radius: f64) -> usize {
        let mut inside = None;
        let mut entries = 0;
        for s in &self.samples {
            let now = s.x.iter().all(|v| v.abs() < radius);
            if inside == Some(false) && now {
                entries += 1;
            }
            inside = Some(now);
        }
        entries
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,x3,mode,lambda\n");
        for s in &self.samples {
            let lambda = s.lambda.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t, s.x[0], s.x[1], s.x[2], s.mode, lambda
            );
        }
        out
    }

    pub fn events_csv(&self) -> String {
        let mut out = String::from("t,kind,x1,x2,x3\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{},{},{},{}", e.t, e.kind, e.x[0], e.x[1], e.x[2]);
        }
        out
    }
}
