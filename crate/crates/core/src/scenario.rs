//! Named systems and the JSON system-configuration format.
//!
//! ```json
//! {
//!   "name": "example",
//!   "f_plus":  ["-x2", "1 + x1", "-7/5"],
//!   "f_minus": ["x3", "-9/10", "1 - 3/5*x1"],
//!   "hidden":  ["1/5", "0", "0"],
//!   "sim": {"epsilon": 0.001, "t_end": 200, "x0": [0.1, 0.5, 0.5], "sigmoid": "tanh"}
//! }
//! ```
//!
//! Instead of explicit fields a config may give normal-form constants,
//! `"params": {"a1": 1, "a2": 1, "b1": -2, "b2": -2, "alpha": 0.2}`. A bare
//! object holding only those five keys is accepted as shorthand.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::field::{normal_form_system, FieldError, PiecewiseSmoothSystem, SmoothField, TwoFoldParams, Vec3};
use crate::integrate::{Sigmoid, Trajectory};
use crate::singularity::{classify_two_fold, Flavor};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}; available: {}", BUILTIN_NAMES.join(", "))]
    Unknown(String),
    #[error("config error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn pointer(&self) -> Option<&str> {
        match self {
            ScenarioError::Schema { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub epsilon: f64,
    pub t_end: f64,
    pub x0: Vec3,
    pub sigmoid: Sigmoid,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            epsilon: 1e-3,
            t_end: 200.0,
            x0: [0.1, 0.5, 0.5],
            sigmoid: Sigmoid::Tanh,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: PiecewiseSmoothSystem,
    pub sim: SimSettings,
    pub provenance: String,
}

impl Scenario {
    pub fn params(&self) -> Option<TwoFoldParams> {
        self.system.normal_form
    }

    pub fn to_config(&self) -> SystemConfig {
        match self.system.normal_form {
            Some(p) => SystemConfig {
                name: self.name.clone(),
                f_plus: None,
                f_minus: None,
                hidden: None,
                params: Some(p),
                sim: Some(self.sim),
            },
            None => SystemConfig {
                name: self.name.clone(),
                f_plus: Some(self.system.f_plus.to_strings()),
                f_minus: Some(self.system.f_minus.to_strings()),
                hidden: Some(self.system.hidden.to_strings()),
                params: None,
                sim: Some(self.sim),
            },
        }
    }
}

/// Serialized form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_plus: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_minus: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<TwoFoldParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
}

impl SystemConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "example-i",
    "example-ii",
    "example-iii",
    "visible-nf",
    "invisible-nf",
    "mixed-nf",
];

pub const VISIBLE_NF: [f64; 4] = [-1.0, -1.0, -1.0, 0.5];
pub const INVISIBLE_NF: [f64; 4] = [1.0, 1.0, -2.0, -2.0];
pub const MIXED_NF: [f64; 4] = [-1.0, 1.0, -4.0, -1.0];
pub const EXAMPLE_ALPHA: f64 = 0.2;

fn fields(plus: [&str; 3], minus: [&str; 3]) -> PiecewiseSmoothSystem {
    let parse = |e: [&str; 3]| SmoothField::parse(e[0], e[1], e[2]).expect("builtin expression");
    PiecewiseSmoothSystem::new(parse(plus), parse(minus), parse(["1/5", "0", "0"]))
}

fn normal_form_scenario(name: &str, v: [f64; 4], expect: Flavor, note: &str) -> Scenario {
    let p = TwoFoldParams::new(v[0], v[1], v[2], v[3], EXAMPLE_ALPHA).expect("builtin constants");
    let flavor = classify_two_fold(&p);
    assert!(
        flavor.tag == expect && flavor.determinacy_breaking,
        "{name}: constants leave the determinacy-breaking set"
    );
    Scenario {
        name: name.to_string(),
        system: normal_form_system(p),
        sim: SimSettings {
            x0: [0.1, 0.5, 0.5],
            ..Default::default()
        },
        provenance: note.to_string(),
    }
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let example = |system, note: &str| Scenario {
        name: name.to_string(),
        system,
        sim: SimSettings::default(),
        provenance: note.to_string(),
    };
    Ok(match name {
        "example-i" => example(
            fields(
                ["-x2", "2/5*x1 + 1/10*x2 - 1", "3/10*x2 - 1/5*x2*x3 - 2/5"],
                ["x3", "1/5*x2*x3 - 3/5", "2/5*x3 - 1 - x1"],
            ),
            "attractor example (i); initial state and window are our choice",
        ),
        "example-ii" => example(
            fields(["-x2", "1 + x1", "-7/5"], ["x3", "-9/10", "1 - 3/5*x1"]),
            "attractor example (ii); initial state and window are our choice",
        ),
        "example-iii" => example(
            fields(
                ["-x2 + 1/10*x1", "x1 - 6/5", "x1 - 2"],
                ["x3 + 1/10*x1", "x1 + 23/100", "1 - x1"],
            ),
            "attractor example (iii); initial state and window are our choice",
        ),
        "visible-nf" => normal_form_scenario(
            name,
            VISIBLE_NF,
            Flavor::Visible,
            "visible two-fold normal form; b1, b2 chosen inside the determinacy-breaking set",
        ),
        "invisible-nf" => normal_form_scenario(
            name,
            INVISIBLE_NF,
            Flavor::Invisible,
            "invisible two-fold normal form; b1, b2 chosen inside the determinacy-breaking set",
        ),
        "mixed-nf" => normal_form_scenario(
            name,
            MIXED_NF,
            Flavor::Mixed,
            "mixed two-fold normal form with a folded saddle/node pair",
        ),
        other => return Err(ScenarioError::Unknown(other.to_string())),
    })
}

const PARAM_KEYS: [&str; 5] = ["a1", "a2", "b1", "b2", "alpha"];
const TOP_KEYS: [&str; 6] = ["name", "f_plus", "f_minus", "hidden", "params", "sim"];
const SIM_KEYS: [&str; 4] = ["epsilon", "t_end", "x0", "sigmoid"];

fn get_f64(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Option<f64>, ScenarioError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| ScenarioError::schema(format!("{at}/{key}"), "expected a finite number")),
    }
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>, ScenarioError> {
    v.as_object()
        .ok_or_else(|| ScenarioError::schema(if at.is_empty() { "/" } else { at }, "expected an object"))
}

fn no_unknown_keys(obj: &Map<String, Value>, allowed: &[&str], at: &str) -> Result<(), ScenarioError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ScenarioError::schema(format!("{at}/{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn parse_field(v: &Value, at: &str) -> Result<SmoothField, ScenarioError> {
    let items = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| ScenarioError::schema(at, "expected an array of three expressions"))?;
    let mut exprs = Vec::with_capacity(3);
    for (i, item) in items.iter().enumerate() {
        let s = item
            .as_str()
            .ok_or_else(|| ScenarioError::schema(format!("{at}/{i}"), "expected a string"))?;
        exprs.push(s);
    }
    SmoothField::parse(exprs[0], exprs[1], exprs[2]).map_err(|e| match e {
        FieldError::Parse { component, source } => {
            ScenarioError::schema(format!("{at}/{}", component - 1), source.to_string())
        }
        other => ScenarioError::schema(at, other.to_string()),
    })
}

fn parse_params(v: &Value, at: &str) -> Result<TwoFoldParams, ScenarioError> {
    let obj = object(v, at)?;
    no_unknown_keys(obj, &PARAM_KEYS, at)?;
    let mut vals = [0.0; 5];
    for (k, key) in PARAM_KEYS.iter().enumerate() {
        vals[k] = get_f64(obj, key, at)?
            .ok_or_else(|| ScenarioError::schema(format!("{at}/{key}"), "missing field"))?;
    }
    TwoFoldParams::new(vals[0], vals[1], vals[2], vals[3], vals[4]).map_err(|e| {
        let key = match &e {
            FieldError::InvalidSign { index, .. } => format!("a{index}"),
            FieldError::NonFinite { name, .. } => name.to_string(),
            _ => String::new(),
        };
        ScenarioError::schema(format!("{at}/{key}"), e.to_string())
    })
}

fn parse_sim(v: &Value) -> Result<SimSettings, ScenarioError> {
    let at = "/sim";
    let obj = object(v, at)?;
    no_unknown_keys(obj, &SIM_KEYS, at)?;
    let mut sim = SimSettings::default();
    if let Some(e) = get_f64(obj, "epsilon", at)? {
        if e <= 0.0 {
            return Err(ScenarioError::schema("/sim/epsilon", "must be positive"));
        }
        sim.epsilon = e;
    }
    if let Some(t) = get_f64(obj, "t_end", at)? {
        if t <= 0.0 {
            return Err(ScenarioError::schema("/sim/t_end", "must be positive"));
        }
        sim.t_end = t;
    }
    if let Some(x0) = obj.get("x0") {
        let arr = x0
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| ScenarioError::schema("/sim/x0", "expected three numbers"))?;
        for (i, c) in arr.iter().enumerate() {
            sim.x0[i] = c
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ScenarioError::schema(format!("/sim/x0/{i}"), "expected a finite number"))?;
        }
    }
    if let Some(s) = obj.get("sigmoid") {
        sim.sigmoid = s
            .as_str()
            .ok_or_else(|| ScenarioError::schema("/sim/sigmoid", "expected a string"))?
            .parse()
            .map_err(|e: String| ScenarioError::schema("/sim/sigmoid", e))?;
    }
    Ok(sim)
}

/// Validates a config document and builds the scenario it describes.
pub fn scenario_from_json(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| ScenarioError::schema("", format!("invalid JSON: {e}")))?;
    let obj = object(&doc, "")?;

    if obj.contains_key("a1") && !obj.contains_key("params") {
        let p = parse_params(&doc, "")?;
        return Ok(Scenario {
            name: "custom".into(),
            system: normal_form_system(p),
            sim: SimSettings::default(),
            provenance: "config file".into(),
        });
    }
    no_unknown_keys(obj, &TOP_KEYS, "")?;

    let name = match obj.get("name") {
        None => "custom".to_string(),
        Some(v) => v
            .as_str()
            .ok_or_else(|| ScenarioError::schema("/name", "expected a string"))?
            .to_string(),
    };
    let sim = match obj.get("sim") {
        Some(v) => parse_sim(v)?,
        None => SimSettings::default(),
    };
    let explicit = ["f_plus", "f_minus", "hidden"]
        .iter()
        .any(|k| obj.contains_key(*k));
    let system = match obj.get("params") {
        Some(p) => {
            if explicit {
                return Err(ScenarioError::schema(
                    "/params",
                    "give either normal-form params or explicit fields, not both",
                ));
            }
            normal_form_system(parse_params(p, "/params")?)
        }
        None => {
            let plus = obj
                .get("f_plus")
                .ok_or_else(|| ScenarioError::schema("/f_plus", "missing field (or give params)"))?;
            let minus = obj
                .get("f_minus")
                .ok_or_else(|| ScenarioError::schema("/f_minus", "missing field (or give params)"))?;
            let hidden = match obj.get("hidden") {
                Some(h) => parse_field(h, "/hidden")?,
                None => SmoothField::zero(),
            };
            PiecewiseSmoothSystem::new(parse_field(plus, "/f_plus")?, parse_field(minus, "/f_minus")?, hidden)
        }
    };
    Ok(Scenario {
        name,
        system,
        sim,
        provenance: "config file".into(),
    })
}

pub fn load_config(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    scenario_from_json(&text)
}

pub fn save_config(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    write(path, &scenario.to_config().to_json())
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Path of the event log written next to a trajectory CSV.
pub fn events_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    path.with_file_name(format!("{stem}.events.csv"))
}

/// Writes the samples to `path` and the event log to
/// [`events_path`]`(path)`.
pub fn save_run(traj: &Trajectory, path: &Path) -> Result<PathBuf, ScenarioError> {
    write(path, &traj.to_csv())?;
    let ev = events_path(path);
    write(&ev, &traj.events_csv())?;
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_examples_evaluate_to_printed_values() {
        let ii = builtin("example-ii").unwrap();
        assert_eq!(ii.system.f_plus.eval(&[0.0, 1.0, 0.0]), [-1.0, 1.0, -1.4]);
        let iii = builtin("example-iii").unwrap();
        assert_eq!(iii.system.f_minus.eval(&[0.0; 3]), [0.0, 0.23, 1.0]);
        let i = builtin("example-i").unwrap();
        assert_eq!(i.system.hidden.eval(&[3.0, 1.0, 2.0]), [0.2, 0.0, 0.0]);
        assert_eq!(
            i.system.f_minus.to_strings(),
            ["x3".to_string(), "1/5*x2*x3 - 3/5".into(), "2/5*x3 - 1 - x1".into()]
        );
    }

    #[test]
    fn normal_form_builtins_break_determinacy() {
        let inv = builtin("invisible-nf").unwrap();
        let f = classify_two_fold(&inv.params().unwrap());
        assert_eq!(f.tag, Flavor::Invisible);
        assert!(f.determinacy_breaking);
        for name in ["visible-nf", "mixed-nf"] {
            let s = builtin(name).unwrap();
            assert!(classify_two_fold(&s.params().unwrap()).determinacy_breaking);
        }
        assert!(matches!(builtin("example-iv"), Err(ScenarioError::Unknown(_))));
    }

    #[test]
    fn normal_form_defaults_have_the_expected_folded_types() {
        use crate::singularity::{folded_singularities, FoldedType};
        let types = |name: &str| -> Vec<FoldedType> {
            let p = builtin(name).unwrap().params().unwrap();
            folded_singularities(&p).unwrap().iter().map(|s| s.folded_type).collect()
        };
        assert_eq!(types("visible-nf"), [FoldedType::FoldedSaddle]);
        assert_eq!(types("invisible-nf"), [FoldedType::FoldedNode]);
        let mut mixed = types("mixed-nf");
        mixed.sort_by_key(|t| *t as u8);
        assert_eq!(mixed, [FoldedType::FoldedSaddle, FoldedType::FoldedNode]);
    }

    #[test]
    fn params_only_configs() {
        let s = scenario_from_json(r#"{"a1":1,"a2":1,"b1":-2,"b2":-2,"alpha":0.2}"#).unwrap();
        assert_eq!(s.params().unwrap(), TwoFoldParams::new(1.0, 1.0, -2.0, -2.0, 0.2).unwrap());
        let s = scenario_from_json(r#"{"params":{"a1":1,"a2":1,"b1":-2,"b2":-2,"alpha":0.2}}"#).unwrap();
        assert!(s.params().is_some());
    }

    #[test]
    fn schema_errors_are_located() {
        let cases = [
            (r#"{"f_plus":["-x2","1","1"]}"#, "/f_minus"),
            (r#"{"f_plus":["-x2","1"],"f_minus":["x3","1","1"]}"#, "/f_plus"),
            (r#"{"f_plus":["-x2","1","1"],"f_minus":["x3","y","1"]}"#, "/f_minus/1"),
            (r#"{"params":{"a1":2,"a2":1,"b1":0,"b2":0,"alpha":0}}"#, "/params/a1"),
            (r#"{"params":{"a1":1,"a2":1,"b1":0,"alpha":0}}"#, "/params/b2"),
            (r#"{"params":{"a1":1,"a2":1,"b1":0,"b2":0,"alpha":0},"sim":{"epsilon":-1}}"#, "/sim/epsilon"),
            (r#"{"params":{"a1":1,"a2":1,"b1":0,"b2":0,"alpha":0},"colour":1}"#, "/colour"),
            (r#"[1,2]"#, "/"),
        ];
        for (doc, pointer) in cases {
            let err = scenario_from_json(doc).unwrap_err();
            assert_eq!(err.pointer(), Some(pointer), "{doc}: {err}");
        }
    }

    #[test]
    fn config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            let path = dir.path().join(format!("{name}.json"));
            save_config(&s, &path).unwrap();
            let back = load_config(&path).unwrap();
            assert_eq!(back.to_config(), s.to_config());
            assert_eq!(back.sim, s.sim);
            for k in 0..20 {
                let x = [0.3 * k as f64 - 2.0, 1.0 - 0.1 * k as f64, 0.05 * k as f64];
                assert_eq!(back.system.f_plus.eval(&x), s.system.f_plus.eval(&x));
                assert_eq!(back.system.f_minus.eval(&x), s.system.f_minus.eval(&x));
            }
        }
    }

    #[test]
    fn events_path_is_a_sibling() {
        assert_eq!(events_path(Path::new("/tmp/a/run.csv")), Path::new("/tmp/a/run.events.csv"));
    }
}
