//! End-to-end runs of the `twofold` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use twofold::scenario::events_path;

fn twofold(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twofold"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const INVISIBLE: [&str; 10] = ["--a1", "1", "--a2", "1", "--b1", "-2", "--b2", "-2", "--alpha", "0.2"];

#[test]
fn classify_reports_the_linear_root() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["classify"];
    args.extend(INVISIBLE);
    let v = stdout_json(&twofold(&args, dir.path()));
    assert_eq!(v["flavor"], "Invisible");
    assert_eq!(v["determinacy_breaking"], true);
    let s = v["folded_singularities"].as_array().unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0]["lambda_s"].as_f64().unwrap(), 0.0);
}

#[test]
fn zero_alpha_has_no_singularities_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["classify", "--a1", "1", "--a2", "-1", "--b1", "3", "--b2", "0", "--alpha", "0"];
    let v = stdout_json(&twofold(&args, dir.path()));
    assert_eq!(v["folded_singularities"].as_array().unwrap().len(), 0);
    assert!(v["note"].is_string());
}

#[test]
fn singularity_report_carries_small_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&twofold(&["singularity", "--scenario", "mixed-nf"], dir.path()));
    let s = v["folded_singularities"].as_array().unwrap();
    assert_eq!(s.len(), 2);
    for sing in s {
        for r in sing["residuals"].as_array().unwrap() {
            assert!(r.as_f64().unwrap().abs() < 1e-12, "{sing}");
        }
    }
}

#[test]
fn transform_check_passes_at_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["transform-check", "--a1", "1", "--a2", "1", "--b1", "1", "--b2", "-1", "--alpha", "0.2"];
    let v = stdout_json(&twofold(&args, dir.path()));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    let slope = checks[0]["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
    assert_eq!(checks[0]["pass"], true);
}

#[test]
fn simulate_example_ii_oscillates_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--scenario", "example-ii", "--epsilon", "1e-3", "--t-end", "200", "--out", "traj.csv",
        "--plot", "traj.svg",
    ];
    let v = stdout_json(&twofold(&args, dir.path()));
    assert_eq!(v["termination"], "Completed");

    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "x1").expect("x1 column");
    let x1: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    let changes = x1.windows(2).filter(|w| w[0].signum() != w[1].signum() && w[0] != 0.0).count();
    assert!(changes > 10, "{changes} sign changes");
    assert_eq!(v["sign_changes_x1"].as_u64().unwrap() as usize, changes);

    let events = std::fs::read_to_string(events_path(&dir.path().join("traj.csv"))).unwrap();
    assert!(events.lines().skip(1).any(|l| l.contains("Crossing")));
    let svg = std::fs::read_to_string(dir.path().join("traj.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = format!("{tag}.csv");
        let plot = format!("{tag}.svg");
        let o = twofold(
            &[
                "simulate", "--scenario", "example-iii", "--t-end", "20", "--seed", "7", "--out", &out, "--plot",
                &plot,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
        (o.stdout, read(&out), read(&plot))
    };
    assert_eq!(run("a"), run("b"));

    let sweep = |_: ()| {
        twofold(&["sweep", "--a1", "1", "--a2", "-1", "--alpha", "0.2", "--steps", "9"], dir.path()).stdout
    };
    let first = sweep(());
    assert_eq!(first.iter().filter(|&&c| c == b'\n').count(), 82);
    assert_eq!(first, sweep(()));
}

#[test]
fn bad_flags_are_usage_errors_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = twofold(&["classify", "--scenario", "visible-nf", "--wobble", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--wobble"), "{}", stderr(&o));

    let o = twofold(&["simulate", "--scenario", "example-ii", "--sigmoid", "cubic"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--sigmoid"), "{}", stderr(&o));

    let o = twofold(&["classify", "--a1", "1", "--a2", "1", "--b1", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--b2"), "{}", stderr(&o));
    assert!(stderr(&o).contains("usage:"), "{}", stderr(&o));

    let o = twofold(&["classify", "--a1", "0.5", "--a2", "1", "--b1", "0", "--b2", "0", "--alpha", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--a1"), "{}", stderr(&o));

    let o = twofold(&["blowup", "--scenario", "example-i"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = twofold(&["classify", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn step_floor_is_a_numerical_failure_with_the_event_tail() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--scenario", "example-ii", "--epsilon", "1e-7", "--min-step", "1e-2", "--max-step", "1",
        "--t-end", "50",
    ];
    let o = twofold(&args, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("StepFloor"), "{}", stderr(&o));
}

#[test]
fn config_files_drive_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = twofold(&["scenario", "show", "invisible-nf"], dir.path());
    assert!(o.status.success());
    std::fs::write(dir.path().join("inv.json"), &o.stdout).unwrap();
    let v = stdout_json(&twofold(&["classify", "--config", "inv.json"], dir.path()));
    assert_eq!(v["flavor"], "Invisible");

    std::fs::write(dir.path().join("bad.json"), r#"{"params": {"a1": 2}}"#).unwrap();
    let o = twofold(&["classify", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/params"), "{}", stderr(&o));
}

#[test]
fn scenario_list_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let o = twofold(&["scenario", "list"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["example-i", "example-ii", "example-iii", "visible-nf", "invisible-nf", "mixed-nf"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    let o = twofold(&["scenario", "show", "nowhere"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn slide_map_and_blowup_emit_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = twofold(
        &["slide-map", "--scenario", "visible-nf", "--steps", "5", "--plot", "map.svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 26);
    let svg = std::fs::read_to_string(dir.path().join("map.svg")).unwrap();
    assert_eq!(svg.matches("<rect ").count(), 26);

    let v = stdout_json(&twofold(
        &["blowup", "--scenario", "invisible-nf", "--t-end", "2", "--plot", "layer.svg"],
        dir.path(),
    ));
    // Leaving the strip |λ| ≤ 1 is a normal ending for a layer run.
    assert!(v["termination"] == "Completed" || v["termination"] == "BoundaryExit", "{v}");
    assert!(v["samples"].as_u64().unwrap() > 1);
    assert!(dir.path().join("layer.svg").exists());
}
