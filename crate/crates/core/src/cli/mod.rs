//! Command-line orchestration: config assembly from `--config` and inline
//! flags, subcommand dispatch, result files and manifests.
//!
//! Exit codes: 0 success, 1 usage, configuration or I/O error, 2 blow-up
//! abort, 3 inconclusive Richardson refinement.

pub mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::errorlab::{
    long_run_rate_experiment, one_step_strong_error, one_step_weak_error, rate_fit, LongRunSpec, OneStepSpec, Reference,
    Target,
};
use crate::metrics::{DistanceReport, Gaussian1d, Law1d, ScaledStudentT};
use crate::model::{build_model, check_dissipativity, check_ellipticity, check_mean_reversion, ModelSpec, ProbeRegion};
use crate::ou_oracle::OuOracle;
use crate::scheme::export::{fmt_f64, measure_rows, write_binary, write_csv, Row};
use crate::scheme::{bel_gradient, run_chain, BlowUpPolicy, EmpiricalAccumulator, NoiseSource, Observer};
use crate::steps::{StepSchedule, StepSpec};

pub use config::{config_from_value, parse_config, Experiment, ExperimentConfig};
use config::{ExportKind, Format, ReferenceKind, TargetKind, TestFunction};
pub use output::{manifest_path, Manifest, OutputSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "langstep", version, about = "Decreasing-step Euler sampler and convergence-order experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate chains and export trajectories or empirical measures.
    Run(RunArgs),
    /// Dump the closed-form OU chain curves as CSV.
    Oracle(OracleArgs),
    /// Convergence-order sweeps.
    Rates {
        #[command(subcommand)]
        sweep: RatesCommand,
    },
    /// Probe a model's dissipativity, ellipticity and mean reversion.
    Check(CheckArgs),
    /// Estimate the gradient of the semigroup with the Bismut–Elworthy–Li weight.
    Bel(BelArgs),
}

#[derive(Debug, Subcommand)]
pub enum RatesCommand {
    OneStepStrong(StrongArgs),
    OneStepWeak(WeakArgs),
    LongRun(LongRunArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON experiment config; inline flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in model, `tag` or `tag:key=value,...`.
    #[arg(long)]
    pub model: Option<String>,
    /// Step schedule, `poly:g1:a` or `explicit:v1,v2,...`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Results file; sidecars are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing result files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub steps: Option<u64>,
    /// `measure` or `final`.
    #[arg(long)]
    pub export: Option<String>,
    /// `csv` or `binary`.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct StrongArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub p: Option<u32>,
    /// `exact_ou` or `fine_grid`.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub substeps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WeakArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Test function: identity, square, cos, sin or tanh.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub substeps: Option<u64>,
    /// Drive the coarse step with independent noise.
    #[arg(long)]
    pub unpaired: bool,
}

#[derive(Debug, Args)]
pub struct LongRunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
    /// Estimator tag, e.g. `w1_exact_1d` or `tv_histogram`.
    #[arg(long)]
    pub distance: Option<String>,
    /// analytic, coupled_exact_ou, coupled_refinement or reference_sample.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub target_factor: Option<u64>,
    #[arg(long)]
    pub t_burn: Option<f64>,
    #[arg(long)]
    pub bins: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub sigma: f64,
    #[arg(long)]
    pub schedule: String,
    /// Last step index; rows `1..=n`.
    #[arg(long)]
    pub n: u64,
    /// Variance of the Gaussian start.
    #[arg(long, default_value_t = 0.0)]
    pub v0: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the step-sequence conditions for this schedule.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct BelArgs {
    #[arg(long)]
    pub model: String,
    /// Test function: identity, square, cos, sin or tanh.
    #[arg(long, default_value = "identity")]
    pub f: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 100)]
    pub substeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Outcome of a subcommand that did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Inconclusive,
}

pub fn exit_code(r: &Result<Status>) -> i32 {
    match r {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::Inconclusive) => EXIT_INCONCLUSIVE,
        Err(Error::BlowUp { .. }) => EXIT_BLOW_UP,
        Err(_) => EXIT_ERROR,
    }
}

/// Parses `args` (including the program name), runs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let r = dispatch(cli.command);
    if let Err(e) = &r {
        eprintln!("error: {e}");
    }
    exit_code(&r)
}

pub fn dispatch(command: Command) -> Result<Status> {
    match command {
        Command::Run(a) => {
            let mut patch = Map::new();
            put(&mut patch, "steps", a.steps);
            put(&mut patch, "export", a.export);
            put(&mut patch, "format", a.format);
            let cfg = assemble(&a.common, None, patch)?;
            execute(&cfg, a.common.force)
        }
        Command::Rates { sweep } => {
            let (common, kind, patch) = match sweep {
                RatesCommand::OneStepStrong(a) => {
                    let mut p = Map::new();
                    put(&mut p, "gammas", a.gammas);
                    put(&mut p, "p", a.p);
                    put(&mut p, "reference", a.reference);
                    put(&mut p, "n_substeps", a.substeps);
                    (a.common, "one_step_strong", p)
                }
                RatesCommand::OneStepWeak(a) => {
                    let mut p = Map::new();
                    put(&mut p, "gammas", a.gammas);
                    put(&mut p, "g", a.g);
                    put(&mut p, "reference", a.reference);
                    put(&mut p, "n_substeps", a.substeps);
                    if a.unpaired {
                        p.insert("paired".into(), false.into());
                    }
                    (a.common, "one_step_weak", p)
                }
                RatesCommand::LongRun(a) => {
                    let mut p = Map::new();
                    put(&mut p, "checkpoints", a.checkpoints);
                    put(&mut p, "distance", a.distance);
                    put(&mut p, "target", a.target);
                    put(&mut p, "target_factor", a.target_factor);
                    put(&mut p, "t_burn", a.t_burn);
                    put(&mut p, "bins", a.bins);
                    (a.common, "long_run", p)
                }
            };
            let cfg = assemble(&common, Some(kind), patch)?;
            execute(&cfg, common.force)
        }
        Command::Oracle(a) => oracle(&a).map(|_| Status::Ok),
        Command::Check(a) => check(&a).map(|_| Status::Ok),
        Command::Bel(a) => bel(&a).map(|_| Status::Ok),
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn put<T: serde::Serialize>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), serde_json::to_value(v).expect("flag serializes"));
    }
}

/// Merges `--config` with inline flags and validates the result.
fn assemble(common: &CommonArgs, kind: Option<&str>, mut experiment: Map<String, Value>) -> Result<ExperimentConfig> {
    let mut doc = match &common.config {
        Some(path) => serde_json::from_str::<Value>(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Config(vec![format!("{}: invalid JSON: {e}", path.display())]))?,
        None => Value::Object(Map::new()),
    };
    let root = doc.as_object_mut().ok_or_else(|| Error::Config(vec!["<root>: expected an object".into()]))?;
    if let Some(m) = &common.model {
        root.insert("model".into(), serde_json::to_value(ModelSpec::parse_short(m)?)?);
    }
    if let Some(s) = &common.schedule {
        root.insert("schedule".into(), serde_json::to_value(StepSpec::parse_short(s)?)?);
    }
    if let Some(out) = &common.out {
        root.insert("output".into(), out.display().to_string().into());
    }
    put(&mut experiment, "paths", common.paths);
    put(&mut experiment, "seed", common.seed);
    put(&mut experiment, "x0", common.x0.clone());
    let exp = root.entry("experiment").or_insert_with(|| Value::Object(Map::new()));
    let exp = exp.as_object_mut().ok_or_else(|| Error::Config(vec!["experiment: expected an object".into()]))?;
    match (kind, exp.get("kind").and_then(Value::as_str)) {
        (Some(k), Some(given)) if k != given => {
            return Err(Error::Config(vec![format!("experiment.kind: '{given}' does not match this subcommand ('{k}')")]));
        }
        (Some(k), _) => {
            exp.insert("kind".into(), k.into());
        }
        (None, None) => {
            exp.insert("kind".into(), "run".into());
        }
        _ => {}
    }
    exp.extend(experiment);
    config_from_value(&doc)
}

fn schedule_for(cfg: &ExperimentConfig, horizon: u64) -> Result<StepSchedule> {
    let spec = cfg.schedule.clone().ok_or_else(|| Error::Config(vec!["schedule: missing required key".into()]))?;
    StepSchedule::new(spec, horizon)
}

fn exact_ou_params(model: &ModelSpec) -> (f64, f64) {
    (
        model.params.get("alpha").copied().unwrap_or(1.0),
        model.params.get("sigma").copied().unwrap_or(std::f64::consts::SQRT_2),
    )
}

/// Closed-form invariant law of a one-dimensional built-in model.
fn analytic_law(model: &ModelSpec) -> Result<Arc<dyn Law1d + Send + Sync>> {
    let d = model.params.get("d").copied().unwrap_or(1.0);
    let kappa = model.params.get("kappa").copied().unwrap_or(1.0);
    match model.builtin.as_str() {
        "ou" if d == 1.0 => {
            let (alpha, sigma) = exact_ou_params(model);
            Ok(Arc::new(Gaussian1d::new(0.0, sigma / (2.0 * alpha).sqrt())?))
        }
        "heavytail" | "gibbs-heavytail" if d == 1.0 => Ok(Arc::new(ScaledStudentT::heavy_tail_invariant(kappa)?)),
        "multiplicative" => Ok(Arc::new(ScaledStudentT::heavy_tail_invariant(1.0)?)),
        other => Err(Error::Config(vec![format!(
            "experiment.target: no analytic invariant law for model '{other}' with d = {d}"
        )])),
    }
}

/// Runs a validated config and writes its results, manifest included.
pub fn execute(cfg: &ExperimentConfig, force: bool) -> Result<Status> {
    let out = cfg.output.clone().ok_or_else(|| Error::Config(vec!["output: missing required key".into()]))?;
    let model = build_model(&cfg.model)?;
    let started = Instant::now();
    let mut status = Status::Ok;
    let (files, summary) = match &cfg.experiment {
        Experiment::Run(p) => {
            let files = OutputSet::prepare(&out, &[], force)?;
            let schedule = schedule_for(cfg, p.steps)?;
            let results: Vec<Result<Vec<Row>>> = (0..p.paths as u64)
                .into_par_iter()
                .map(|stream| {
                    let mut noise = NoiseSource::new(p.seed, stream);
                    match p.export {
                        ExportKind::Measure => {
                            let mut acc = EmpiricalAccumulator::new(model.dim());
                            let mut obs: [&mut dyn Observer; 1] = [&mut acc];
                            run_chain(model.as_ref(), &schedule, p.steps, &p.x0, &mut noise, &mut obs)?;
                            Ok(measure_rows(stream, &acc.measure))
                        }
                        ExportKind::Final => {
                            let s = run_chain(model.as_ref(), &schedule, p.steps, &p.x0, &mut noise, &mut [])?;
                            Ok(vec![Row::snapshot(stream, &s)])
                        }
                    }
                })
                .collect();
            let mut rows = Vec::new();
            let mut dropped = 0u64;
            for r in results {
                match r {
                    Ok(rs) => rows.extend(rs),
                    Err(Error::BlowUp { .. }) if p.policy == BlowUpPolicy::DropPath => dropped += 1,
                    Err(e) => return Err(e),
                }
            }
            let mut w = files.create(0)?;
            match p.format {
                Format::Csv => write_csv(&mut w, model.dim(), &rows)?,
                Format::Binary => write_binary(&mut w, model.dim(), &rows)?,
            }
            w.flush()?;
            (files, json!({"rows": rows.len(), "dropped": dropped}))
        }
        Experiment::LongRun(p) => {
            let files = OutputSet::prepare(&out, &[".jsonl"], force)?;
            let last = *p.checkpoints.last().expect("validated non-empty");
            let horizon = if p.target == TargetKind::ReferenceSample { last * p.target_factor } else { last };
            let schedule = schedule_for(cfg, horizon)?;
            let target = match p.target {
                TargetKind::Analytic => Target::Analytic(analytic_law(&cfg.model)?),
                TargetKind::CoupledExactOu => {
                    let (alpha, sigma) = exact_ou_params(&cfg.model);
                    Target::CoupledExactOu { alpha, sigma }
                }
                TargetKind::CoupledRefinement => Target::CoupledRefinement { factor: p.target_factor as usize },
                TargetKind::ReferenceSample => Target::ReferenceSample { length_factor: p.target_factor },
            };
            let mut spec = LongRunSpec::new(p.checkpoints.clone(), p.paths, p.x0.clone(), target, p.distance, p.seed);
            spec.t_burn = p.t_burn;
            spec.bins = p.bins;
            spec.n_batches = p.batches;
            spec.n_projections = p.projections;
            spec.policy = p.policy;
            let res = long_run_rate_experiment(model.as_ref(), &schedule, &spec)?;
            let mut csv = String::from("n,gamma_n,Gamma_n,value,std_error,past_burn_in\n");
            let mut jsonl = String::new();
            for pt in &res.points {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    pt.n,
                    fmt_f64(pt.gamma),
                    fmt_f64(pt.gamma_sum),
                    fmt_f64(pt.value),
                    fmt_f64(pt.std_error),
                    pt.past_burn_in
                ));
                let report = DistanceReport::new(res.estimator, pt.value)
                    .with("n", pt.n)
                    .with("gamma_n", pt.gamma)
                    .with("std_error", pt.std_error)
                    .with("target", res.target)
                    .with("paths", res.paths as u64);
                jsonl.push_str(&report.to_json_row().to_string());
                jsonl.push('\n');
            }
            files.write(0, csv.as_bytes())?;
            files.write(1, jsonl.as_bytes())?;
            let summary = json!({
                "fit": res.fit,
                "t_burn": res.t_burn,
                "rho": res.rho,
                "varpi": res.varpi,
                "approximate_target": res.approximate_target,
                "paths": res.paths,
                "dropped": res.dropped,
                "notes": res.notes,
            });
            (files, summary)
        }
        Experiment::OneStepStrong(p) => {
            let files = OutputSet::prepare(&out, &[], force)?;
            let reference = reference_for(p.reference, p.n_substeps, &cfg.model);
            let spec = OneStepSpec { n_paths: p.paths, seed: p.seed, policy: p.policy };
            let mut csv = String::from("gamma,error,std_error,paths,dropped\n");
            let mut pairs = Vec::new();
            for &g in &p.gammas {
                let e = one_step_strong_error(model.as_ref(), &p.x0, g, p.p, reference, &spec)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(e.gamma),
                    fmt_f64(e.error),
                    fmt_f64(e.std_error),
                    e.paths,
                    e.dropped
                ));
                pairs.push((e.gamma, e.error));
            }
            files.write(0, csv.as_bytes())?;
            (files, json!({"fit": fit_if_possible(&pairs)}))
        }
        Experiment::OneStepWeak(p) => {
            let files = OutputSet::prepare(&out, &[], force)?;
            let reference = reference_for(p.reference, p.n_substeps, &cfg.model);
            let spec = OneStepSpec { n_paths: p.paths, seed: p.seed, policy: p.policy };
            let g = p.g;
            let f = move |x: &[f64]| g.eval(x);
            let mut csv = String::from("gamma,error,std_error,n_substeps,richardson_bias,inconclusive,paths,dropped\n");
            let mut pairs = Vec::new();
            for &gamma in &p.gammas {
                let e = one_step_weak_error(model.as_ref(), &f, &p.x0, gamma, reference, p.paired, &spec)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(e.gamma),
                    fmt_f64(e.error),
                    fmt_f64(e.std_error),
                    e.n_substeps,
                    fmt_f64(e.richardson_bias),
                    e.inconclusive,
                    e.paths,
                    e.dropped
                ));
                if e.inconclusive {
                    status = Status::Inconclusive;
                }
                pairs.push((e.gamma, e.error));
            }
            files.write(0, csv.as_bytes())?;
            (files, json!({"fit": fit_if_possible(&pairs), "inconclusive": status == Status::Inconclusive}))
        }
    };
    let manifest = Manifest::new(
        cfg.experiment.kind(),
        serde_json::from_str(&cfg.canonical())?,
        cfg.experiment.seed(),
        started.elapsed().as_secs_f64(),
        files.paths(),
        summary,
    );
    emit(&serde_json::to_string_pretty(&manifest.summary)?)?;
    files.write_manifest(&manifest)?;
    Ok(status)
}

fn reference_for(kind: ReferenceKind, n_substeps: usize, model: &ModelSpec) -> Reference {
    match kind {
        ReferenceKind::ExactOu => {
            let (alpha, sigma) = exact_ou_params(model);
            Reference::ExactOu { alpha, sigma }
        }
        ReferenceKind::FineGrid => Reference::FineGrid { n_substeps },
    }
}

fn fit_if_possible(pairs: &[(f64, f64)]) -> Value {
    match rate_fit(pairs) {
        Ok(f) => serde_json::to_value(f).expect("fit serializes"),
        Err(_) => Value::Null,
    }
}

/// CSV of the OU oracle curves for `n = 1..=N`.
pub fn oracle_csv(alpha: f64, sigma: f64, schedule: StepSchedule, v0: f64) -> Result<String> {
    let horizon = schedule.horizon();
    let o = OuOracle::with_initial_variance(alpha, sigma, schedule, v0)?;
    let mut s = String::with_capacity(horizon as usize * 96);
    s.push_str("n,gamma_n,Gamma_n,variance,w1,tv_lower_bound\n");
    for n in 1..=horizon {
        let r = o.row(n)?;
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.gamma),
            fmt_f64(r.gamma_sum),
            fmt_f64(r.variance),
            fmt_f64(r.w1),
            fmt_f64(r.tv_lower_bound)
        ));
    }
    Ok(s)
}

fn oracle(a: &OracleArgs) -> Result<()> {
    let started = Instant::now();
    let spec = StepSpec::parse_short(&a.schedule)?;
    let csv = oracle_csv(a.alpha, a.sigma, StepSchedule::new(spec.clone(), a.n)?, a.v0)?;
    match &a.out {
        None => emit(csv.trim_end())?,
        Some(out) => {
            let files = OutputSet::prepare(out, &[], a.force)?;
            files.write(0, csv.as_bytes())?;
            let echo = json!({"alpha": a.alpha, "sigma": a.sigma, "schedule": spec, "n": a.n, "v0": a.v0});
            let m = Manifest::new("oracle", echo, 0, started.elapsed().as_secs_f64(), files.paths(), json!({"rows": a.n}));
            files.write_manifest(&m)?;
        }
    }
    Ok(())
}

fn check(a: &CheckArgs) -> Result<()> {
    let spec = ModelSpec::parse_short(&a.model)?;
    let model = build_model(&spec)?;
    let diss = check_dissipativity(model.as_ref(), a.samples, ProbeRegion::Ball { radius: a.radius }, a.seed)?;
    let ell = check_ellipticity(model.as_ref(), a.samples, a.radius, a.seed)?;
    let mr = match check_mean_reversion(model.as_ref(), a.samples, a.radius, a.seed) {
        Ok(r) => serde_json::to_value(r)?,
        Err(Error::MissingLyapunov) => Value::Null,
        Err(e) => return Err(e),
    };
    let mut report = json!({
        "model": spec,
        "metadata": model.metadata(),
        "dissipativity": diss,
        "ellipticity": ell,
        "mean_reversion": mr,
    });
    if let Some(s) = &a.schedule {
        let sched = StepSchedule::new(StepSpec::parse_short(s)?, a.horizon)?;
        report["schedule"] = json!({
            "spec": sched.spec(),
            "varpi": sched.varpi(),
            "conditions": sched.check_gamma_assumption(a.horizon),
        });
    }
    emit(&serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn bel(a: &BelArgs) -> Result<()> {
    let spec = ModelSpec::parse_short(&a.model)?;
    let model = build_model(&spec)?;
    let f = TestFunction::parse(&a.f)
        .ok_or_else(|| Error::invalid(format!("unknown test function '{}' (expected one of {:?})", a.f, TestFunction::NAMES)))?;
    let x = if a.x.is_empty() { vec![0.0; model.dim()] } else { a.x.clone() };
    let g = move |y: &[f64]| f.eval(y);
    let est = bel_gradient(model.as_ref(), &g, &x, a.t, a.paths, a.substeps, a.seed)?;
    emit(&serde_json::to_string_pretty(&json!({"x": x, "t": a.t, "f": f, "estimate": est}))?)?;
    Ok(())
}
