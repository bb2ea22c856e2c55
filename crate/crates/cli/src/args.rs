use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twofold::integrate::RepellingPolicy;
use twofold::Sigmoid;

use crate::plot::View;

#[derive(Debug, Parser)]
#[command(
    name = "twofold",
    version,
    about = "Two-fold singularities: classification, folded singularities, simulation and plots"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flavour, determinacy-breaking and folded singularities (summary JSON).
    Classify(ReportArgs),
    /// Full folded-singularity report: location, constants, type, residuals.
    Singularity(ReportArgs),
    /// Sliding-region map over a (x2, x3) grid on the switching surface (CSV).
    SlideMap(SlideMapArgs),
    /// Integrate a system (smoothed by default, or Filippov).
    Simulate(SimulateArgs),
    /// Integrate the blown-up layer; --x0 is (lambda, x2, x3).
    Blowup(BlowupArgs),
    /// Order study of the normal-form equivalence at each folded singularity.
    TransformCheck(TransformArgs),
    /// Flavour/type region map over a (b1, b2) grid (CSV, computed in parallel).
    Sweep(SweepArgs),
    /// Built-in scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Names and provenance notes.
    List,
    /// Print a scenario as a config document.
    Show { name: String },
}

/// Where the system comes from: normal-form constants, a config file or a
/// built-in scenario.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["config", "scenario"])]
    pub a1: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["config", "scenario"])]
    pub a2: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["config", "scenario"])]
    pub b1: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["config", "scenario"])]
    pub b2: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["config", "scenario"])]
    pub alpha: Option<f64>,
    /// System config (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    /// Built-in scenario name (see `scenario list`).
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Write the main artifact here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Recorded in the output for reproducibility; nothing here is random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Also write an SVG plot.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
    /// Axis to view along: u3 (x2 - x3), x1, x2 or x3.
    #[arg(long, default_value = "u3", value_parser = parse_view)]
    pub view: View,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SlideMapArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Half-width of the square (x2, x3) window.
    #[arg(long, default_value_t = 2.0)]
    pub range: f64,
    /// Grid points per side.
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Smoothed,
    Filippov,
}

/// Step-size and tolerance overrides.
#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub min_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum, default_value_t = Method::Smoothed)]
    pub method: Method,
    /// Smoothing width (smoothed runs).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Initial state as x1,x2,x3.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub x0: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_sigmoid)]
    pub sigmoid: Option<Sigmoid>,
    /// Repelling-slide continuation: stay, eject-plus, eject-minus, eject-at:<t>.
    #[arg(long, default_value = "stay", value_parser = parse_policy)]
    pub policy: RepellingPolicy,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BlowupArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Initial layer state as lambda,x2,x3.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0.5,0.5")]
    pub x0: [f64; 3],
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub plot: PlotArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Sample radii h (comma separated); ε is tied to h.
    #[arg(long, value_parser = parse_list, default_value = "1e-1,1e-2,1e-3,1e-4")]
    pub scales: Scales,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Range of b1 as lo:hi.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-6:6")]
    pub b1_range: (f64, f64),
    /// Range of b2 as lo:hi.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-6:6")]
    pub b2_range: (f64, f64),
    /// Grid points per axis.
    #[arg(long, default_value_t = 49)]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    Ok([parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scales(pub Vec<f64>);

fn parse_list(s: &str) -> Result<Scales, String> {
    let v = s.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|h| *h <= 0.0) {
        return Err("scales must be positive".into());
    }
    Ok(Scales(v))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo, hi))
}

fn parse_sigmoid(s: &str) -> Result<Sigmoid, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<RepellingPolicy, String> {
    s.parse()
}

fn parse_view(s: &str) -> Result<View, String> {
    s.parse()
}
