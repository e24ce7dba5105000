//! Experiment configuration: a JSON document validated as a whole, with
//! every problem reported at once together with its path in the document.
//!
//! ```json
//! {
//!   "model": {"builtin": "ou", "params": {"alpha": 1, "sigma": 1.4142135623730951}},
//!   "schedule": {"kind": "polynomial", "gamma1": 0.5, "a": 0.9},
//!   "experiment": {"kind": "long_run", "checkpoints": [1000, 10000], "paths": 1000},
//!   "output": "ou_long_run.csv"
//! }
//! ```

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::metrics::Estimator;
use crate::model::ModelSpec;
use crate::scheme::BlowUpPolicy;
use crate::steps::StepSpec;

/// Keys users commonly reach for, mapped to the key the schema uses.
const SYNONYMS: &[(&str, &str)] = &[
    ("stepsize", "schedule"),
    ("step_size", "schedule"),
    ("steps_schedule", "schedule"),
    ("gamma", "schedule"),
    ("step", "schedule"),
    ("n_paths", "paths"),
    ("num_paths", "paths"),
    ("n_steps", "steps"),
    ("out", "output"),
    ("output_path", "output"),
    ("estimator", "distance"),
    ("metric", "distance"),
    ("x", "x0"),
    ("start", "x0"),
    ("substeps", "n_substeps"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Required by `run` and `long_run`; unused by the one-step sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<StepSpec>,
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Run(RunParams),
    LongRun(LongRunParams),
    OneStepStrong(StrongParams),
    OneStepWeak(WeakParams),
}

impl Experiment {
    pub const KINDS: [&'static str; 4] = ["run", "long_run", "one_step_strong", "one_step_weak"];

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Run(_) => "run",
            Experiment::LongRun(_) => "long_run",
            Experiment::OneStepStrong(_) => "one_step_strong",
            Experiment::OneStepWeak(_) => "one_step_weak",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Experiment::Run(p) => p.seed,
            Experiment::LongRun(p) => p.seed,
            Experiment::OneStepStrong(p) => p.seed,
            Experiment::OneStepWeak(p) => p.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    /// Atoms of each path's weighted empirical measure.
    Measure,
    /// Final state of each path.
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunParams {
    pub steps: u64,
    pub paths: usize,
    pub x0: Vec<f64>,
    pub seed: u64,
    pub export: ExportKind,
    pub format: Format,
    pub policy: BlowUpPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Analytic,
    CoupledExactOu,
    CoupledRefinement,
    ReferenceSample,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongRunParams {
    pub checkpoints: Vec<u64>,
    pub paths: usize,
    pub x0: Vec<f64>,
    pub seed: u64,
    pub distance: Estimator,
    pub target: TargetKind,
    /// Refinement factor or reference length factor.
    pub target_factor: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_burn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    pub batches: usize,
    pub projections: usize,
    pub policy: BlowUpPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    ExactOu,
    FineGrid,
}

/// Named smooth test functions (the library API takes arbitrary closures).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Identity,
    Square,
    Cos,
    Sin,
    Tanh,
}

impl TestFunction {
    pub const NAMES: [&'static str; 5] = ["identity", "square", "cos", "sin", "tanh"];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "identity" => TestFunction::Identity,
            "square" => TestFunction::Square,
            "cos" => TestFunction::Cos,
            "sin" => TestFunction::Sin,
            "tanh" => TestFunction::Tanh,
            _ => return None,
        })
    }

    /// Applied to the first coordinate, except `square` which is `|x|²`.
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Identity => x[0],
            TestFunction::Square => x.iter().map(|v| v * v).sum(),
            TestFunction::Cos => x[0].cos(),
            TestFunction::Sin => x[0].sin(),
            TestFunction::Tanh => x[0].tanh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongParams {
    pub gammas: Vec<f64>,
    pub x0: Vec<f64>,
    pub p: u32,
    pub paths: usize,
    pub seed: u64,
    pub reference: ReferenceKind,
    pub n_substeps: usize,
    pub policy: BlowUpPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakParams {
    pub gammas: Vec<f64>,
    pub x0: Vec<f64>,
    pub g: TestFunction,
    pub paths: usize,
    pub seed: u64,
    pub reference: ReferenceKind,
    pub n_substeps: usize,
    pub paired: bool,
    pub policy: BlowUpPolicy,
}

impl ExperimentConfig {
    /// Pretty JSON with every default filled in; parses back to `self`.
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.model.params.get("d").map_or(1, |d| *d as usize)
    }
}

/// Parses and validates a config, collecting every error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("invalid JSON: {e}")]))?;
    config_from_value(&value)
}

pub fn config_from_value(value: &Value) -> Result<ExperimentConfig> {
    let mut errs = Vec::new();
    let cfg = from_value(value, &mut errs);
    match cfg {
        Some(c) if errs.is_empty() => Ok(c),
        _ => Err(Error::Config(errs)),
    }
}

fn from_value(value: &Value, errs: &mut Vec<String>) -> Option<ExperimentConfig> {
    let mut root = Obj::new(value, "", errs)?;
    let model = root.take("model", true).and_then(|v| model_from(v, root.errs));
    let schedule_given = root.take("schedule", false);
    let schedule = schedule_given.and_then(|v| schedule_from(v, root.errs));
    let output = root.string("output", None).map(PathBuf::from);
    let experiment_value = root.take("experiment", true);
    root.finish(&["model", "schedule", "experiment", "output"]);
    let d = model.as_ref().map_or(1, |m: &ModelSpec| m.params.get("d").map_or(1, |d| *d as usize));
    let is_ou = model.as_ref().is_some_and(|m| m.builtin == "ou");
    let experiment = experiment_value.and_then(|v| experiment_from(v, d, is_ou, errs));
    if schedule_given.is_none() && matches!(experiment, Some(Experiment::Run(_) | Experiment::LongRun(_))) {
        errs.push("schedule: missing required key".into());
    }
    if schedule_given.is_some() && schedule.is_none() {
        return None;
    }
    Some(ExperimentConfig { model: model?, schedule, experiment: experiment?, output })
}

fn model_from(v: &Value, errs: &mut Vec<String>) -> Option<ModelSpec> {
    let mut o = Obj::new(v, "model", errs)?;
    let builtin = o.string("builtin", Some(""));
    let mut params = std::collections::BTreeMap::new();
    if let Some(p) = o.take("params", false) {
        match p.as_object() {
            Some(m) => {
                for (k, v) in m {
                    match v.as_f64() {
                        Some(x) => {
                            params.insert(k.clone(), x);
                        }
                        None => o.errs.push(format!("model.params.{k}: expected a number")),
                    }
                }
            }
            None => o.errs.push("model.params: expected an object".into()),
        }
    }
    o.finish(&["builtin", "params"]);
    let spec = ModelSpec { builtin: builtin?, params };
    let problems = spec.validate();
    let ok = problems.is_empty();
    errs.extend(problems);
    ok.then_some(spec)
}

fn schedule_from(v: &Value, errs: &mut Vec<String>) -> Option<StepSpec> {
    let mut o = Obj::new(v, "schedule", errs)?;
    let kind = o.string("kind", Some(""))?;
    match kind.as_str() {
        "polynomial" => {
            let gamma1 = o.number("gamma1", None, |g| g > 0.0, "must be > 0");
            let a = o.number("a", None, |a| (0.0..=1.0).contains(&a), "must lie in [0, 1]");
            o.finish(&["kind", "gamma1", "a"]);
            Some(StepSpec::Polynomial { gamma1: gamma1?, a: a? })
        }
        "explicit" => {
            let values = o.numbers("values", true, |g| g > 0.0, "entries must be > 0");
            if let Some(vs) = &values {
                if vs.is_empty() {
                    o.errs.push("schedule.values: must be non-empty".into());
                } else if vs.windows(2).any(|w| w[1] > w[0]) {
                    o.errs.push("schedule.values: must be non-increasing".into());
                }
            }
            o.finish(&["kind", "values"]);
            Some(StepSpec::Explicit { values: values? })
        }
        other => {
            o.errs.push(format!("schedule.kind: unknown kind '{other}' (expected polynomial or explicit)"));
            None
        }
    }
}

fn experiment_from(v: &Value, d: usize, is_ou: bool, errs: &mut Vec<String>) -> Option<Experiment> {
    let mut o = Obj::new(v, "experiment", errs)?;
    let kind = o.string("kind", Some(""))?;
    let seed = o.integer("seed", Some(0), |_| true, "");
    let paths_default = match kind.as_str() {
        "run" => 1,
        "long_run" => 1000,
        _ => 10_000,
    };
    let paths = o.integer("paths", Some(paths_default), |p| p >= 1, "must be >= 1").map(|p| p as usize);
    let x0 = match o.numbers("x0", false, |_| true, "") {
        Some(x) if x.len() != d => {
            o.errs.push(format!("experiment.x0: expected {d} coordinates (got {})", x.len()));
            None
        }
        Some(x) => Some(x),
        None => Some(vec![0.0; d]),
    };
    let policy = o.choice("policy", "abort", &["abort", "drop_path"]).map(|p| match p {
        "abort" => BlowUpPolicy::Abort,
        _ => BlowUpPolicy::DropPath,
    });
    let mut common = vec!["kind", "seed", "paths", "x0", "policy"];
    let exp = match kind.as_str() {
        "run" => {
            let steps = o.integer("steps", None, |s| s >= 1, "must be >= 1");
            let export = o.choice("export", "measure", &["measure", "final"]).map(|e| match e {
                "measure" => ExportKind::Measure,
                _ => ExportKind::Final,
            });
            let format = o.choice("format", "csv", &["csv", "binary"]).map(|f| match f {
                "csv" => Format::Csv,
                _ => Format::Binary,
            });
            common.extend(["steps", "export", "format"]);
            o.finish(&common);
            Experiment::Run(RunParams {
                steps: steps?,
                paths: paths?,
                x0: x0?,
                seed: seed?,
                export: export?,
                format: format?,
                policy: policy?,
            })
        }
        "long_run" => {
            let checkpoints = o.integers("checkpoints", |c| c >= 1, "entries must be >= 1");
            if let Some(cs) = &checkpoints {
                if cs.is_empty() || cs.windows(2).any(|w| w[1] <= w[0]) {
                    o.errs.push("experiment.checkpoints: must be non-empty and strictly increasing".into());
                }
            }
            let distance = o.string("distance", Some("w1_exact_1d")).and_then(|s| match s.parse::<Estimator>() {
                Ok(e) => Some(e),
                Err(e) => {
                    o.errs.push(format!("experiment.distance: {e}"));
                    None
                }
            });
            let target_default = if d == 1 { "analytic" } else { "coupled_refinement" };
            let target = o
                .choice("target", target_default, &["analytic", "coupled_exact_ou", "coupled_refinement", "reference_sample"])
                .map(|t| match t {
                    "analytic" => TargetKind::Analytic,
                    "coupled_exact_ou" => TargetKind::CoupledExactOu,
                    "coupled_refinement" => TargetKind::CoupledRefinement,
                    _ => TargetKind::ReferenceSample,
                });
            if target == Some(TargetKind::CoupledExactOu) && !is_ou {
                o.errs.push("experiment.target: coupled_exact_ou needs the ou model".into());
            }
            let target_factor = o.integer("target_factor", Some(10), |f| f >= 2, "must be >= 2");
            let t_burn = o.opt_number("t_burn", |t| t >= 0.0, "must be >= 0");
            let bins = o.opt_integer("bins", |b| b >= 2, "must be >= 2").map(|b| b as usize);
            let batches = o.integer("batches", Some(10), |b| b >= 2, "must be >= 2").map(|b| b as usize);
            let projections = o.integer("projections", Some(64), |b| b >= 1, "must be >= 1").map(|b| b as usize);
            if let (Some(p), Some(b)) = (paths, batches) {
                if p < 2 * b {
                    o.errs.push(format!("experiment.paths: must be at least 2 * batches = {}", 2 * b));
                }
            }
            common.extend(["checkpoints", "distance", "target", "target_factor", "t_burn", "bins", "batches", "projections"]);
            o.finish(&common);
            Experiment::LongRun(LongRunParams {
                checkpoints: checkpoints?,
                paths: paths?,
                x0: x0?,
                seed: seed?,
                distance: distance?,
                target: target?,
                target_factor: target_factor?,
                t_burn,
                bins,
                batches: batches?,
                projections: projections?,
                policy: policy?,
            })
        }
        "one_step_strong" | "one_step_weak" => {
            let gammas = o.numbers("gammas", true, |g| g > 0.0, "entries must be > 0");
            let reference = o
                .choice("reference", if is_ou { "exact_ou" } else { "fine_grid" }, &["exact_ou", "fine_grid"])
                .map(|r| if r == "exact_ou" { ReferenceKind::ExactOu } else { ReferenceKind::FineGrid });
            if reference == Some(ReferenceKind::ExactOu) && !is_ou {
                o.errs.push("experiment.reference: exact_ou needs the ou model".into());
            }
            let strong = kind == "one_step_strong";
            let n_substeps =
                o.integer("n_substeps", Some(if strong { 64 } else { 32 }), |m| m >= 32, "must be >= 32").map(|m| m as usize);
            common.extend(["gammas", "reference", "n_substeps"]);
            if strong {
                let p = o.integer("p", Some(2), |p| [1, 2, 4].contains(&p), "must be 1, 2 or 4").map(|p| p as u32);
                common.push("p");
                o.finish(&common);
                Experiment::OneStepStrong(StrongParams {
                    gammas: gammas?,
                    x0: x0?,
                    p: p?,
                    paths: paths?,
                    seed: seed?,
                    reference: reference?,
                    n_substeps: n_substeps?,
                    policy: policy?,
                })
            } else {
                let g = o.choice("g", "square", &TestFunction::NAMES).and_then(TestFunction::parse);
                let paired = o.boolean("paired", true);
                common.extend(["g", "paired"]);
                o.finish(&common);
                Experiment::OneStepWeak(WeakParams {
                    gammas: gammas?,
                    x0: x0?,
                    g: g?,
                    paths: paths?,
                    seed: seed?,
                    reference: reference?,
                    n_substeps: n_substeps?,
                    paired: paired?,
                    policy: policy?,
                })
            }
        }
        other => {
            o.errs.push(format!("experiment.kind: unknown kind '{other}' (expected one of {:?})", Experiment::KINDS));
            return None;
        }
    };
    Some(exp)
}

/// Suggests the intended key for an unknown one.
pub fn suggest(key: &str, allowed: &[&str]) -> Option<String> {
    let lower = key.to_ascii_lowercase();
    if let Some((_, to)) = SYNONYMS.iter().find(|(from, to)| *from == lower && allowed.contains(to)) {
        return Some(to.to_string());
    }
    allowed
        .iter()
        .map(|a| (strsim::jaro_winkler(&lower, a), *a))
        .filter(|(s, _)| *s >= 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, a)| a.to_string())
}

/// A JSON object being consumed key by key.
struct Obj<'v, 'e> {
    map: &'v Map<String, Value>,
    path: &'static str,
    errs: &'e mut Vec<String>,
}

impl<'v, 'e> Obj<'v, 'e> {
    fn new(v: &'v Value, path: &'static str, errs: &'e mut Vec<String>) -> Option<Self> {
        match v.as_object() {
            Some(map) => Some(Obj { map, path, errs }),
            None => {
                errs.push(format!("{}: expected an object", if path.is_empty() { "<root>" } else { path }));
                None
            }
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn take(&mut self, k: &str, required: bool) -> Option<&'v Value> {
        let v = self.map.get(k).filter(|v| !v.is_null());
        if v.is_none() && required {
            let key = self.key(k);
            self.errs.push(format!("{key}: missing required key"));
        }
        v
    }

    fn string(&mut self, k: &str, default: Option<&str>) -> Option<String> {
        match self.take(k, default == Some("")) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                let key = self.key(k);
                self.errs.push(format!("{key}: expected a string"));
                None
            }
            None => default.filter(|d| !d.is_empty()).map(str::to_string),
        }
    }

    fn choice(&mut self, k: &str, default: &'static str, options: &[&'static str]) -> Option<&'static str> {
        let s = self.string(k, Some(default))?;
        match options.iter().find(|o| **o == s) {
            Some(o) => Some(o),
            None => {
                let key = self.key(k);
                self.errs.push(format!("{key}: '{s}' is not one of {options:?}"));
                None
            }
        }
    }

    fn boolean(&mut self, k: &str, default: bool) -> Option<bool> {
        match self.take(k, false) {
            None => Some(default),
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => {
                let key = self.key(k);
                self.errs.push(format!("{key}: expected true or false"));
                None
            }
        }
    }

    fn check_number(&mut self, k: &str, v: &Value, ok: impl Fn(f64) -> bool, constraint: &str) -> Option<f64> {
        let key = self.key(k);
        match v.as_f64() {
            Some(x) if x.is_finite() && ok(x) => Some(x),
            Some(x) => {
                self.errs.push(format!("{key}: {constraint} (got {x})"));
                None
            }
            None => {
                self.errs.push(format!("{key}: expected a number"));
                None
            }
        }
    }

    fn number(&mut self, k: &str, default: Option<f64>, ok: impl Fn(f64) -> bool, constraint: &str) -> Option<f64> {
        match self.take(k, default.is_none()) {
            Some(v) => self.check_number(k, v, ok, constraint),
            None => default,
        }
    }

    fn opt_number(&mut self, k: &str, ok: impl Fn(f64) -> bool, constraint: &str) -> Option<f64> {
        let v = self.take(k, false)?;
        self.check_number(k, v, ok, constraint)
    }

    fn check_integer(&mut self, k: &str, v: &Value, ok: impl Fn(u64) -> bool, constraint: &str) -> Option<u64> {
        let key = self.key(k);
        match v.as_u64() {
            Some(x) if ok(x) => Some(x),
            Some(x) => {
                self.errs.push(format!("{key}: {constraint} (got {x})"));
                None
            }
            None => {
                self.errs.push(format!("{key}: expected a non-negative integer (got {v})"));
                None
            }
        }
    }

    fn integer(&mut self, k: &str, default: Option<u64>, ok: impl Fn(u64) -> bool, constraint: &str) -> Option<u64> {
        match self.take(k, default.is_none()) {
            Some(v) => self.check_integer(k, v, ok, constraint),
            None => default,
        }
    }

    fn opt_integer(&mut self, k: &str, ok: impl Fn(u64) -> bool, constraint: &str) -> Option<u64> {
        let v = self.take(k, false)?;
        self.check_integer(k, v, ok, constraint)
    }

    fn array(&mut self, k: &str, required: bool) -> Option<&'v Vec<Value>> {
        match self.take(k, required)? {
            Value::Array(a) => Some(a),
            _ => {
                let key = self.key(k);
                self.errs.push(format!("{key}: expected an array"));
                None
            }
        }
    }

    fn numbers(&mut self, k: &str, required: bool, ok: impl Fn(f64) -> bool, constraint: &str) -> Option<Vec<f64>> {
        let arr = self.array(k, required)?;
        let before = self.errs.len();
        let out: Vec<f64> = arr.iter().filter_map(|v| self.check_number(k, v, &ok, constraint)).collect();
        (self.errs.len() == before).then_some(out)
    }

    fn integers(&mut self, k: &str, ok: impl Fn(u64) -> bool, constraint: &str) -> Option<Vec<u64>> {
        let arr = self.array(k, true)?;
        let before = self.errs.len();
        let out: Vec<u64> = arr.iter().filter_map(|v| self.check_integer(k, v, &ok, constraint)).collect();
        (self.errs.len() == before).then_some(out)
    }

    /// Reports every key not in `allowed`.
    fn finish(&mut self, allowed: &[&str]) {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                let key = self.key(k);
                let hint = suggest(k, allowed).map(|s| format!("; did you mean '{s}'?")).unwrap_or_default();
                self.errs.push(format!("{key}: unknown key{hint}"));
            }
        }
    }
}
