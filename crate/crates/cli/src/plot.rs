//! Static SVG rendering of trajectories, layer runs and slide maps.
//!
//! Output is a pure function of the input: fixed viewport, fixed number
//! formatting, no timestamps.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;
use twofold::integrate::{Mode, Trajectory};
use twofold::RegionClass;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot: input is empty")]
    Empty,
    #[error("non-finite coordinate in plot input")]
    NonFinite,
}

/// Axis the 3D data is viewed along (orthographic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum View {
    /// Along `u3 = p2 - p3`, with `u2 = p2 + p3` horizontal and the first
    /// coordinate vertical.
    #[default]
    U3,
    X1,
    X2,
    X3,
}

impl FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "u3" => Ok(View::U3),
            "x1" => Ok(View::X1),
            "x2" => Ok(View::X2),
            "x3" => Ok(View::X3),
            other => Err(format!("unknown view {other:?} (expected u3, x1, x2 or x3)")),
        }
    }
}

impl View {
    /// Screen-plane coordinates `(horizontal, vertical)` and their labels.
    fn project(self, p: &[f64; 3]) -> (f64, f64) {
        match self {
            View::U3 => (p[1] + p[2], p[0]),
            View::X1 => (p[1], p[2]),
            View::X2 => (p[2], p[0]),
            View::X3 => (p[1], p[0]),
        }
    }

    fn labels(self, first: &str) -> (String, String) {
        match self {
            View::U3 => ("x2 + x3".into(), first.into()),
            View::X1 => ("x2".into(), "x3".into()),
            View::X2 => ("x3".into(), first.into()),
            View::X3 => ("x2".into(), first.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub view: View,
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            view: View::U3,
            width: 640,
            height: 480,
            title: None,
        }
    }
}

/// One cell of a sliding-region map over `(x2, x3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlideCell {
    pub x2: f64,
    pub x3: f64,
    pub region: RegionClass,
}

pub enum PlotInput<'a> {
    Trajectory(&'a Trajectory),
    /// A layer run, state `(λ, x2, x3)`.
    Blowup(&'a Trajectory),
    SlideMap(&'a [SlideCell]),
}

const MARGIN: f64 = 48.0;

fn mode_colour(m: Mode) -> &'static str {
    match m {
        Mode::FlowPlus => "#c0392b",
        Mode::FlowMinus => "#2471a3",
        Mode::Sliding => "#1e8449",
        Mode::Layer => "#7d3c98",
        Mode::Smooth => "#222222",
    }
}

fn region_colour(r: RegionClass) -> &'static str {
    match r {
        RegionClass::Crossing => "#f2f3f4",
        RegionClass::AttractingSliding => "#a9dfbf",
        RegionClass::RepellingSliding => "#f5b7b1",
        RegionClass::Tangency => "#555555",
    }
}

/// Data-to-pixel map with the data box fitted into the viewport.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn fit(points: &[(f64, f64)], w: u32, h: u32) -> Result<Frame, PlotError> {
        if points.is_empty() {
            return Err(PlotError::Empty);
        }
        if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(PlotError::NonFinite);
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(a, b) in points {
            x0 = x0.min(a);
            x1 = x1.max(a);
            y0 = y0.min(b);
            y1 = y1.max(b);
        }
        // Degenerate extents get a unit box so a single point still renders.
        if x1 - x0 <= f64::EPSILON * x0.abs().max(1.0) {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 - y0 <= f64::EPSILON * y0.abs().max(1.0) {
            y0 -= 1.0;
            y1 += 1.0;
        }
        Ok(Frame {
            x0,
            x1,
            y0,
            y1,
            w: w as f64,
            h: h as f64,
        })
    }

    fn px(&self, a: f64, b: f64) -> (f64, f64) {
        let sx = (a - self.x0) / (self.x1 - self.x0);
        let sy = (b - self.y0) / (self.y1 - self.y0);
        (
            MARGIN + sx * (self.w - 2.0 * MARGIN),
            self.h - MARGIN - sy * (self.h - 2.0 * MARGIN),
        )
    }
}

fn header(out: &mut String, style: &PlotStyle, frame: &Frame, labels: &(String, String)) {
    let (w, h) = (style.width, style.height);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        "<desc>bounds {} in [{:.6e}, {:.6e}], {} in [{:.6e}, {:.6e}]</desc>",
        labels.0, frame.x0, frame.x1, labels.1, frame.y0, frame.y1
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if let Some(t) = &style.title {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            w as f64 / 2.0,
            escape(t)
        );
    }
    // Axes through the origin when it is in view, else along the frame edge.
    let ox = if frame.x0 <= 0.0 && 0.0 <= frame.x1 { 0.0 } else { frame.x0 };
    let oy = if frame.y0 <= 0.0 && 0.0 <= frame.y1 { 0.0 } else { frame.y0 };
    let (ax0, ay) = frame.px(frame.x0, oy);
    let (ax1, _) = frame.px(frame.x1, oy);
    let (ax, ay0) = frame.px(ox, frame.y0);
    let (_, ay1) = frame.px(ox, frame.y1);
    let _ = writeln!(
        out,
        r##"<g stroke="#999999" stroke-width="1"><line x1="{ax0:.2}" y1="{ay:.2}" x2="{ax1:.2}" y2="{ay:.2}"/><line x1="{ax:.2}" y1="{ay0:.2}" x2="{ax:.2}" y2="{ay1:.2}"/></g>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
        frame.w - MARGIN,
        frame.h - MARGIN / 3.0,
        escape(&labels.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
        MARGIN / 4.0,
        MARGIN - 8.0,
        escape(&labels.1)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn curve(tr: &Trajectory, style: &PlotStyle, first: &str) -> Result<String, PlotError> {
    let pts: Vec<(f64, f64)> = tr.samples.iter().map(|s| style.view.project(&s.x)).collect();
    let frame = Frame::fit(&pts, style.width, style.height)?;
    let labels = style.view.labels(first);
    let mut out = String::new();
    header(&mut out, style, &frame, &labels);
    if pts.len() == 1 {
        let (x, y) = frame.px(pts[0].0, pts[0].1);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
            mode_colour(tr.samples[0].mode)
        );
    } else {
        // One polyline per run of equal mode, sharing the switch sample.
        let mut start = 0;
        while start + 1 < pts.len() {
            let mode = tr.samples[start + 1].mode;
            let mut end = start + 1;
            while end + 1 < pts.len() && tr.samples[end + 1].mode == mode {
                end += 1;
            }
            let _ = write!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points=""#,
                mode_colour(mode)
            );
            for (k, &(a, b)) in pts[start..=end].iter().enumerate() {
                let (x, y) = frame.px(a, b);
                let _ = write!(out, "{}{x:.2},{y:.2}", if k == 0 { "" } else { " " });
            }
            out.push_str("\"/>\n");
            start = end;
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn slide_map(cells: &[SlideCell], style: &PlotStyle) -> Result<String, PlotError> {
    let pts: Vec<(f64, f64)> = cells.iter().map(|c| (c.x2, c.x3)).collect();
    let frame = Frame::fit(&pts, style.width, style.height)?;
    let mut out = String::new();
    header(&mut out, style, &frame, &("x2".into(), "x3".into()));
    // Cell size from the grid spacing; a lone cell gets a fixed square.
    let n = (cells.len() as f64).sqrt().max(1.0);
    let cw = ((frame.w - 2.0 * MARGIN) / n).max(2.0);
    let ch = ((frame.h - 2.0 * MARGIN) / n).max(2.0);
    for c in cells {
        let (x, y) = frame.px(c.x2, c.x3);
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"/>"#,
            x - cw / 2.0,
            y - ch / 2.0,
            region_colour(c.region)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(input: PlotInput<'_>, style: &PlotStyle) -> Result<String, PlotError> {
    match input {
        PlotInput::Trajectory(tr) => curve(tr, style, "x1"),
        PlotInput::Blowup(tr) => curve(tr, style, "lambda"),
        PlotInput::SlideMap(cells) => slide_map(cells, style),
    }
}
