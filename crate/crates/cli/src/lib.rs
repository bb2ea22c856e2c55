//! Command-line front end for the `twofold` library.
//!
//! [`run`] is the whole program; `main` only forwards the process arguments
//! and streams. Exit codes: 0 success, 2 usage or input error, 3 numerical
//! failure (step floor, stalled or non-convergent event), 1 I/O.

pub mod args;
pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use twofold::field::FieldError;
use twofold::integrate::{IntegrationError, Termination, Trajectory};
use twofold::scenario::{ScenarioError, SimSettings, BUILTIN_NAMES};
use twofold::singularity::{classify_two_fold, folded_singularities, indeterminacy_residuals};
use twofold::transform::{order_study, ASYMPTOTIC_RATIO};
use twofold::{
    builtin, integrate_blowup, integrate_filippov, integrate_smoothed, load_config,
    normal_form_system, region_classify, save_run, sliding_lambda, EventKind, IntegratorOptions,
    Scenario, TransformContext, TwoFoldParams,
};

use args::{
    BlowupArgs, Cli, Command, Method, OutArgs, PlotArgs, ReportArgs, ScenarioCommand,
    SimulateArgs, SlideMapArgs, SweepArgs, SystemArgs, TolArgs, TransformArgs,
};
use plot::{emit_plot, PlotInput, PlotStyle, SlideCell};

pub const GRAMMAR: &str = "usage: twofold <command> [--a1 ±1 --a2 ±1 --b1 f --b2 f --alpha f | --config path | --scenario name] \
[--epsilon f] [--t-end f] [--x0 f,f,f] [--sigmoid tanh|sqrt] [--policy stay|eject-plus|eject-minus] \
[--out path] [--plot path] [--seed u64]
commands: classify, singularity, slide-map, simulate, blowup, transform-check, sweep, scenario list|show";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {message}")]
    Numerical { message: String, tail: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn integration_error(e: IntegrationError) -> CliError {
    match e {
        IntegrationError::NonconvergentEvent { .. } => CliError::Numerical {
            message: e.to_string(),
            tail: String::new(),
        },
        other => CliError::Usage(other.to_string()),
    }
}

/// Runs one invocation; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            // Asked-for help goes to stdout; anything else is a usage error.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}\n{GRAMMAR}\n");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Numerical { tail, .. } = &e {
                if !tail.is_empty() {
                    let _ = writeln!(err, "last events:\n{tail}");
                }
            }
            if matches!(e, CliError::Usage(_)) {
                let _ = writeln!(err, "\n{GRAMMAR}");
            }
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Classify(a) => classify(&a, out),
        Command::Singularity(a) => singularity(&a, out),
        Command::SlideMap(a) => slide_map(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Blowup(a) => blowup(&a, out),
        Command::TransformCheck(a) => transform_check(&a, out),
        Command::Sweep(a) => sweep(&a, out),
        Command::Scenario(ScenarioCommand::List) => {
            for name in BUILTIN_NAMES {
                let s = builtin(name)?;
                write_stdout(out, &format!("{name}\t{}\n", s.provenance))?;
            }
            Ok(())
        }
        Command::Scenario(ScenarioCommand::Show { name }) => {
            write_stdout(out, &builtin(&name)?.to_config().to_json())
        }
    }
}

// ---------------------------------------------------------------------------
// Inputs

fn params_error(e: FieldError) -> CliError {
    match e {
        FieldError::InvalidSign { index, value } => {
            CliError::Usage(format!("--a{index} must be 1 or -1, got {value}"))
        }
        FieldError::NonFinite { name, value } => {
            CliError::Usage(format!("--{name} must be finite, got {value}"))
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn load_system(a: &SystemArgs) -> Result<Scenario, CliError> {
    if let Some(name) = &a.scenario {
        return Ok(builtin(name)?);
    }
    if let Some(path) = &a.config {
        return Ok(load_config(path)?);
    }
    let given = [a.a1, a.a2, a.b1, a.b2, a.alpha];
    if given.iter().all(Option::is_none) {
        return Err(CliError::Usage(
            "no system given: use --a1 --a2 --b1 --b2 --alpha, --config PATH or --scenario NAME".into(),
        ));
    }
    let names = ["a1", "a2", "b1", "b2", "alpha"];
    if let Some(k) = given.iter().position(Option::is_none) {
        return Err(CliError::Usage(format!(
            "missing --{}: normal-form systems need all of --a1 --a2 --b1 --b2 --alpha",
            names[k]
        )));
    }
    let v: Vec<f64> = given.iter().map(|x| x.unwrap()).collect();
    let p = TwoFoldParams::new(v[0], v[1], v[2], v[3], v[4]).map_err(params_error)?;
    Ok(Scenario {
        name: "custom".into(),
        system: normal_form_system(p),
        sim: SimSettings::default(),
        provenance: "command line".into(),
    })
}

fn require_params(sc: &Scenario) -> Result<TwoFoldParams, CliError> {
    sc.params().ok_or_else(|| {
        CliError::Usage(format!(
            "system {:?} is not in normal form; this command needs --a1 --a2 --b1 --b2 --alpha or a params config",
            sc.name
        ))
    })
}

fn options(tol: &TolArgs) -> IntegratorOptions {
    let d = IntegratorOptions::default();
    IntegratorOptions {
        rel_tol: tol.rel_tol.unwrap_or(d.rel_tol),
        abs_tol: tol.abs_tol.unwrap_or(d.abs_tol),
        max_step: tol.max_step.unwrap_or(d.max_step),
        min_step: tol.min_step.unwrap_or(d.min_step),
        ..d
    }
}

// ---------------------------------------------------------------------------
// Outputs

fn write_stdout(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Main artifact to `--out` or stdout.
fn emit(o: &OutArgs, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &o.out {
        Some(p) => write_file(p, text),
        None => write_stdout(out, text),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn params_json(p: &TwoFoldParams) -> Value {
    json!({"a1": p.a1, "a2": p.a2, "b1": p.b1, "b2": p.b2, "alpha": p.alpha})
}

fn plot_to(args: &PlotArgs, input: PlotInput<'_>, title: String) -> Result<(), CliError> {
    let Some(path) = &args.plot else {
        return Ok(());
    };
    let style = PlotStyle {
        view: args.view,
        title: Some(title),
        ..PlotStyle::default()
    };
    let svg = emit_plot(input, &style).map_err(|e| CliError::Usage(format!("plot: {e}")))?;
    write_file(path, &svg)
}

// ---------------------------------------------------------------------------
// Commands

fn classify(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = load_system(&a.system)?;
    let p = require_params(&sc)?;
    let flavor = classify_two_fold(&p);
    let (list, note) = match folded_singularities(&p) {
        Ok(list) => (list, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let sings: Vec<Value> = list
        .iter()
        .map(|s| {
            json!({
                // + 0.0 folds a signed zero into 0.
                "lambda_s": s.lambda_s + 0.0,
                "x2s": s.x2s,
                "x3s": s.x3s,
                "type": s.folded_type,
                "det": s.det,
            })
        })
        .collect();
    let mut doc = json!({
        "system": sc.name,
        "params": params_json(&p),
        "flavor": flavor.tag,
        "determinacy_breaking": flavor.determinacy_breaking,
        "folded_singularities": sings,
        "seed": a.out.seed,
    });
    if let Some(n) = note {
        doc["note"] = json!(n);
    }
    emit(&a.out, &pretty(&doc), out)
}

fn singularity(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = load_system(&a.system)?;
    let p = require_params(&sc)?;
    let list = folded_singularities(&p).map_err(|e| CliError::Usage(e.to_string()))?;
    let sings: Vec<Value> = list
        .iter()
        .map(|s| {
            let mut v = s.to_json();
            v["residuals"] = json!(indeterminacy_residuals(&p, s.lambda_s, s.x2s, s.x3s));
            v
        })
        .collect();
    let doc = json!({
        "system": sc.name,
        "params": params_json(&p),
        "folded_singularities": sings,
        "seed": a.out.seed,
    });
    emit(&a.out, &pretty(&doc), out)
}

fn slide_map(a: &SlideMapArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    if !(a.range > 0.0 && a.range.is_finite()) {
        return Err(CliError::Usage("--range must be positive".into()));
    }
    let sc = load_system(&a.system)?;
    let n = a.steps;
    let at = |i: usize| -a.range + 2.0 * a.range * i as f64 / (n - 1) as f64;
    let mut csv = String::from("x2,x3,region,roots,lambda_attracting,lambda_repelling\n");
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x2, x3) = (at(i), at(j));
            let region = region_classify(&sc.system, x2, x3);
            let sols = sliding_lambda(&sc.system, x2, x3);
            let pick = |attracting: bool| {
                sols.iter()
                    .find(|s| (s.stability == twofold::sliding::Stability::Attracting) == attracting)
                    .map(|s| s.lambda.to_string())
                    .unwrap_or_default()
            };
            csv.push_str(&format!(
                "{x2},{x3},{region:?},{},{},{}\n",
                sols.len(),
                pick(true),
                pick(false)
            ));
            cells.push(SlideCell { x2, x3, region });
        }
    }
    emit(&a.out, &csv, out)?;
    plot_to(&a.plot, PlotInput::SlideMap(&cells), format!("{}: sliding regions", sc.name))
}

fn event_counts(tr: &Trajectory) -> Value {
    let kinds = [
        EventKind::Crossing,
        EventKind::SlideEntry,
        EventKind::SlideExit,
        EventKind::TwoFoldHit,
        EventKind::DeterminacyBreak,
        EventKind::StepFloor,
        EventKind::BoundaryExit,
    ];
    let mut m = serde_json::Map::new();
    for k in kinds {
        m.insert(k.to_string(), json!(tr.count_events(k)));
    }
    Value::Object(m)
}

fn summary(tr: &Trajectory, extra: Value) -> Value {
    let mut doc = json!({
        "termination": tr.termination,
        "t_end": tr.t_end(),
        "samples": tr.len(),
        "accepted_steps": tr.accepted_steps,
        "rejected_steps": tr.rejected_steps,
        "final_state": tr.final_state(),
        "max_abs": tr.max_abs(),
        "sign_changes_x1": tr.sign_changes_x1(),
        "ball_entries_r1": tr.ball_entries(1.0),
        "events": event_counts(tr),
        "seed": tr.seed,
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    doc
}

/// Writes the run artifacts, then turns an abnormal ending into exit 3.
fn finish_run(
    tr: &Trajectory,
    extra: Value,
    o: &OutArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if let Some(path) = &o.out {
        save_run(tr, path)?;
    }
    write_stdout(out, &pretty(&summary(tr, extra)))?;
    match tr.termination {
        Termination::Completed | Termination::BoundaryExit => Ok(()),
        t => {
            let log = tr.events_csv();
            let lines: Vec<&str> = log.lines().collect();
            let tail = lines[lines.len().saturating_sub(10)..].join("\n");
            Err(CliError::Numerical {
                message: format!("run ended with {t:?} at t = {}", tr.t_end()),
                tail,
            })
        }
    }
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = load_system(&a.system)?;
    let sim = SimSettings {
        epsilon: a.epsilon.unwrap_or(sc.sim.epsilon),
        t_end: a.t_end.unwrap_or(sc.sim.t_end),
        x0: a.x0.unwrap_or(sc.sim.x0),
        sigmoid: a.sigmoid.unwrap_or(sc.sim.sigmoid),
    };
    let opts = IntegratorOptions {
        repelling_policy: a.policy,
        ..options(&a.tol)
    };
    let span = (0.0, sim.t_end);
    let mut tr = match a.method {
        Method::Smoothed => integrate_smoothed(&sc.system, sim.sigmoid, sim.epsilon, sim.x0, span, &opts),
        Method::Filippov => integrate_filippov(&sc.system, sim.x0, span, &opts),
    }
    .map_err(integration_error)?;
    tr.seed = Some(a.out.seed);
    let method = match a.method {
        Method::Smoothed => "smoothed",
        Method::Filippov => "filippov",
    };
    plot_to(&a.plot, PlotInput::Trajectory(&tr), format!("{} ({method})", sc.name))?;
    let mut extra = json!({
        "system": sc.name,
        "method": method,
        "x0": sim.x0,
        "t_end_requested": sim.t_end,
    });
    if a.method == Method::Smoothed {
        extra["epsilon"] = json!(sim.epsilon);
        extra["sigmoid"] = json!(sim.sigmoid.name());
    }
    finish_run(&tr, extra, &a.out, out)
}

fn blowup(a: &BlowupArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = load_system(&a.system)?;
    let p = require_params(&sc)?;
    let opts = options(&a.tol);
    let mut tr = integrate_blowup(&p, a.epsilon, a.x0, (0.0, a.t_end), &opts).map_err(integration_error)?;
    tr.seed = Some(a.out.seed);
    plot_to(&a.plot, PlotInput::Blowup(&tr), format!("{} (layer)", sc.name))?;
    let extra = json!({
        "system": sc.name,
        "epsilon": a.epsilon,
        "u0": a.x0,
        "t_end_requested": a.t_end,
    });
    finish_run(&tr, extra, &a.out, out)
}

fn transform_check(a: &TransformArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = load_system(&a.system)?;
    let p = require_params(&sc)?;
    let scales = &a.scales.0;
    if scales.len() < 2 || scales.iter().any(|h| *h > 1.0) {
        return Err(CliError::Usage("--scales needs at least two radii in (0, 1]".into()));
    }
    let (ctxs, note) = match TransformContext::all_for(p, scales[0]) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let mut checks = Vec::new();
    for ctx in &ctxs {
        let ratio = ctx.curve_radius_ratio(scales[0]);
        let v = match order_study(ctx, scales) {
            Ok(c) => json!({
                "lambda_s": c.lambda_s,
                "a_tilde": c.a_tilde,
                "b_tilde": c.b_tilde,
                "c_tilde": c.c_tilde,
                "h": c.h_values,
                "residuals": c.residuals,
                "slope": c.slope,
                "pass": c.pass,
                "curve_radius_ratio": ratio,
                "asymptotic": ratio <= ASYMPTOTIC_RATIO,
            }),
            Err(e) => json!({
                "lambda_s": ctx.singularity.lambda_s,
                "error": e.to_string(),
                "pass": false,
                "curve_radius_ratio": ratio,
            }),
        };
        checks.push(v);
    }
    let mut doc = json!({
        "system": sc.name,
        "params": params_json(&p),
        "checks": checks,
        "seed": a.out.seed,
    });
    if let Some(n) = note {
        doc["note"] = json!(n);
    }
    emit(&a.out, &pretty(&doc), out)
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    TwoFoldParams::new(a.a1, a.a2, 0.0, 0.0, a.alpha).map_err(params_error)?;
    let n = a.steps;
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    // Cells are independent; collect keeps grid order so output is stable.
    let rows: Vec<String> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (b1, b2) = (at(a.b1_range, k / n), at(a.b2_range, k % n));
            let p = TwoFoldParams::new(a.a1, a.a2, b1, b2, a.alpha).expect("validated above");
            let f = classify_two_fold(&p);
            let (count, types) = match folded_singularities(&p) {
                Ok(list) => (
                    list.len(),
                    list.iter()
                        .map(|s| format!("{:?}", s.folded_type))
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
                Err(_) => (0, String::new()),
            };
            format!("{b1},{b2},{:?},{},{count},{types}\n", f.tag, f.determinacy_breaking)
        })
        .collect();
    let mut csv = String::from("b1,b2,flavor,determinacy_breaking,singularities,types\n");
    for r in rows {
        csv.push_str(&r);
    }
    emit(&a.out, &csv, out)
}
