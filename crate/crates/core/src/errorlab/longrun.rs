use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{rate_fit, RateFit};
use crate::error::{Error, Result};
use crate::metrics::{
    tv_histogram, tv_histogram_vs_law, w1_binned_1d, w1_exact_1d, w1_sliced, Estimator, Law1d, Side, WeightedSamples,
};
use crate::model::Diffusion;
use crate::ou_oracle::ExactOuStep;
use crate::scheme::{euler_update, run_chain, BlowUpPolicy, NoiseSource, StepBuffers};
use crate::steps::{StepSchedule, Varpi};

const AUX_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// What the chain marginal at step `n` is compared with.
#[derive(Clone)]
pub enum Target {
    /// A known invariant law (one-dimensional).
    Analytic(Arc<dyn Law1d + Send + Sync>),
    /// The exact OU process `dY = −αY dt + σ dW` started from its
    /// invariant law and driven by the chain's own Brownian path, so its
    /// sample at every checkpoint is exactly invariant-distributed.
    CoupledExactOu { alpha: f64, sigma: f64 },
    /// The Euler chain on a grid `factor` times finer (each step split
    /// into `factor` sub-steps), from the same start and on the same path.
    CoupledRefinement { factor: usize },
    /// Independent chains run `length_factor` times as many steps; their
    /// final states stand in for the invariant law (approximate).
    ReferenceSample { length_factor: u64 },
}

impl Target {
    pub fn tag(&self) -> &'static str {
        match self {
            Target::Analytic(_) => "analytic",
            Target::CoupledExactOu { .. } => "coupled_exact_ou",
            Target::CoupledRefinement { .. } => "coupled_refinement",
            Target::ReferenceSample { .. } => "reference_sample",
        }
    }
}

#[derive(Clone)]
pub struct LongRunSpec {
    pub checkpoints: Vec<u64>,
    pub n_paths: usize,
    pub x0: Vec<f64>,
    pub target: Target,
    pub distance: Estimator,
    pub seed: u64,
    /// Burn-in time; defaults to the time at which `e^{−ρΓ_n}` drops below
    /// the smallest checkpoint step.
    pub t_burn: Option<f64>,
    /// Histogram bins (TV) or number of W₁ bins; defaults to `⌈N^{1/3}⌉`.
    pub bins: Option<usize>,
    /// Explicit bin edges for the binned W₁.
    pub edges: Option<Vec<f64>>,
    pub n_projections: usize,
    /// Number of path batches behind the reported standard errors.
    pub n_batches: usize,
    pub policy: BlowUpPolicy,
}

impl LongRunSpec {
    pub fn new(checkpoints: Vec<u64>, n_paths: usize, x0: Vec<f64>, target: Target, distance: Estimator, seed: u64) -> Self {
        LongRunSpec {
            checkpoints,
            n_paths,
            x0,
            target,
            distance,
            seed,
            t_burn: None,
            bins: None,
            edges: None,
            n_projections: 64,
            n_batches: 10,
            policy: BlowUpPolicy::Abort,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongRunPoint {
    pub n: u64,
    pub gamma: f64,
    pub gamma_sum: f64,
    pub value: f64,
    /// Spread of the distance over path batches, divided by `√batches`.
    pub std_error: f64,
    pub past_burn_in: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LongRunResult {
    pub points: Vec<LongRunPoint>,
    /// Fit of distance against `γ_n` over the points past burn-in.
    pub fit: Option<RateFit>,
    pub t_burn: f64,
    pub rho: f64,
    pub varpi: Varpi,
    pub estimator: Estimator,
    pub target: &'static str,
    pub approximate_target: bool,
    pub paths: usize,
    pub dropped: usize,
    pub notes: Vec<String>,
}

struct PathSamples {
    chain: Vec<f64>,
    target: Vec<f64>,
}

fn simulate_path(
    model: &dyn Diffusion,
    schedule: &StepSchedule,
    spec: &LongRunSpec,
    ou_steps: &[ExactOuStep],
    path: u64,
) -> Option<PathSamples> {
    let d = model.dim();
    let q = model.noise_dim();
    let horizon = *spec.checkpoints.last().unwrap();
    let mut noise = NoiseSource::new(spec.seed, path);
    let mut aux = NoiseSource::new(spec.seed ^ AUX_SALT, path);
    let mut buf = StepBuffers::new(model);
    let mut x = spec.x0.clone();
    let mut y = match spec.target {
        Target::CoupledExactOu { alpha, sigma } => {
            let sd = sigma / (2.0 * alpha).sqrt();
            (0..d).map(|_| sd * aux.standard_normal()).collect()
        }
        Target::CoupledRefinement { .. } => spec.x0.clone(),
        _ => Vec::new(),
    };
    let coupled = !y.is_empty();
    let mut out = PathSamples {
        chain: Vec::with_capacity(spec.checkpoints.len() * d),
        target: Vec::with_capacity(if coupled { spec.checkpoints.len() * d } else { 0 }),
    };
    let mut next = 0;
    let mut record = |k: u64, x: &[f64], y: &[f64], next: &mut usize| {
        while *next < spec.checkpoints.len() && spec.checkpoints[*next] == k {
            out.chain.extend_from_slice(x);
            if coupled {
                out.target.extend_from_slice(y);
            }
            *next += 1;
        }
    };
    record(0, &x, &y, &mut next);
    let mut dw = vec![0.0; q];
    let mut fine = vec![0.0; q];
    for k in 1..=horizon {
        let gamma = schedule.gamma(k).ok()?;
        match spec.target {
            Target::CoupledRefinement { factor } => {
                let h = gamma / factor as f64;
                dw.fill(0.0);
                for _ in 0..factor {
                    noise.increments(h, &mut fine);
                    for (c, f) in dw.iter_mut().zip(&fine) {
                        *c += f;
                    }
                    if !euler_update(model, &mut y, h, &fine, &mut buf) {
                        return None;
                    }
                }
            }
            Target::CoupledExactOu { sigma, .. } => {
                noise.increments(gamma, &mut dw);
                let st = &ou_steps[k as usize - 1];
                for (yi, w) in y.iter_mut().zip(&dw) {
                    *yi = st.apply(*yi, sigma, *w, aux.standard_normal());
                }
            }
            _ => noise.increments(gamma, &mut dw),
        }
        if !euler_update(model, &mut x, gamma, &dw, &mut buf) {
            return None;
        }
        record(k, &x, &y, &mut next);
    }
    Some(out)
}

fn quantile_range(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    let at = |q: f64| values[((values.len() - 1) as f64 * q).round() as usize];
    let (lo, hi) = (at(0.001), at(0.999));
    if hi > lo {
        let pad = 0.1 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

enum Against<'a> {
    Law(&'a dyn Law1d),
    Samples(&'a WeightedSamples),
}

struct Resolution {
    edges: Option<Vec<f64>>,
    range: Option<(f64, f64)>,
}

fn measure(spec: &LongRunSpec, chain: &WeightedSamples, against: &Against, res: &Resolution) -> Result<f64> {
    let report = match (spec.distance, against) {
        (Estimator::W1Exact1d, Against::Law(l)) => w1_exact_1d(Side::Samples(chain), Side::Law(*l))?,
        (Estimator::W1Exact1d, Against::Samples(s)) => w1_exact_1d(Side::Samples(chain), Side::Samples(s))?,
        (Estimator::W1Binned1d, a) => {
            let other = match a {
                Against::Law(l) => Side::Law(*l),
                Against::Samples(s) => Side::Samples(s),
            };
            w1_binned_1d(Side::Samples(chain), other, res.edges.as_ref().expect("edges resolved"))?
        }
        (Estimator::W1Sliced, Against::Samples(s)) => w1_sliced(chain, s, spec.n_projections, spec.seed)?,
        (Estimator::TvHistogram, Against::Law(l)) => tv_histogram_vs_law(chain, *l, spec.bins, res.range)?,
        (Estimator::TvHistogram, Against::Samples(s)) => {
            let r = res.range.map(|r| vec![r]);
            tv_histogram(chain, s, spec.bins, r.as_deref())?
        }
        (e, _) => {
            return Err(Error::invalid(format!("estimator {} is not available for this target", e.tag())));
        }
    };
    Ok(report.value)
}

fn subset(s: &WeightedSamples, range: std::ops::Range<usize>) -> WeightedSamples {
    let d = s.dim();
    WeightedSamples::uniform(d, s.points()[range.start * d..range.end * d].to_vec()).expect("non-empty batch")
}

/// Runs `n_paths` chains, measures the distance between the cross-path
/// marginal and the target at every checkpoint, and fits the distance
/// against `γ_n` over the checkpoints past burn-in.
pub fn long_run_rate_experiment(
    model: &dyn Diffusion,
    schedule: &StepSchedule,
    spec: &LongRunSpec,
) -> Result<LongRunResult> {
    let d = model.dim();
    if spec.x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.x0.len(), context: "initial point" });
    }
    if spec.checkpoints.is_empty() || spec.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints must be non-empty and strictly increasing"));
    }
    let horizon = *spec.checkpoints.last().unwrap();
    if horizon > schedule.horizon() {
        return Err(Error::CheckpointBeyondHorizon { checkpoint: horizon, horizon: schedule.horizon() });
    }
    if spec.n_paths < 2 * spec.n_batches.max(1) {
        return Err(Error::invalid("need at least two paths per batch"));
    }
    let mut notes = Vec::new();
    match &spec.target {
        Target::Analytic(_) if d != 1 => return Err(Error::invalid("analytic targets are one-dimensional")),
        Target::CoupledExactOu { alpha, sigma } if !(*alpha > 0.0 && *sigma > 0.0) || model.noise_dim() != d => {
            return Err(Error::invalid("coupled OU target needs alpha, sigma > 0 and q = d"));
        }
        Target::CoupledRefinement { factor } if *factor < 2 => {
            return Err(Error::invalid("refinement factor must be >= 2"));
        }
        Target::ReferenceSample { length_factor } => {
            if *length_factor < 2 {
                return Err(Error::invalid("reference length factor must be >= 2"));
            }
            if horizon * length_factor > schedule.horizon() {
                return Err(Error::CheckpointBeyondHorizon {
                    checkpoint: horizon * length_factor,
                    horizon: schedule.horizon(),
                });
            }
            notes.push("reference sample from finite-length chains: approximate target".into());
        }
        _ => {}
    }
    if d != 1 && spec.distance != Estimator::W1Sliced && spec.distance != Estimator::TvHistogram {
        return Err(Error::invalid(format!("{} needs d = 1", spec.distance.tag())));
    }

    let ou_steps: Vec<ExactOuStep> = match spec.target {
        Target::CoupledExactOu { alpha, .. } => {
            (1..=horizon).map(|k| schedule.gamma(k).map(|g| ExactOuStep::new(alpha, g))).collect::<Result<_>>()?
        }
        _ => Vec::new(),
    };
    let raw: Vec<Option<PathSamples>> = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate_path(model, schedule, spec, &ou_steps, p))
        .collect();
    let mut paths = Vec::with_capacity(spec.n_paths);
    let mut dropped = 0;
    for r in raw {
        match r {
            Some(p) => paths.push(p),
            None if spec.policy == BlowUpPolicy::DropPath => dropped += 1,
            None => return Err(Error::BlowUp { n: horizon, x: Vec::new() }),
        }
    }
    if paths.len() < 2 * spec.n_batches.max(1) {
        return Err(Error::invalid("too few surviving paths"));
    }

    let reference = if let Target::ReferenceSample { length_factor } = spec.target {
        let steps = horizon * length_factor;
        let finals: Vec<Result<Vec<f64>>> = (0..spec.n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let mut noise = NoiseSource::new(spec.seed ^ AUX_SALT.rotate_left(29), p);
                run_chain(model, schedule, steps, &spec.x0, &mut noise, &mut []).map(|s| s.x)
            })
            .collect();
        let mut flat = Vec::with_capacity(spec.n_paths * d);
        for f in finals {
            match f {
                Ok(x) => flat.extend(x),
                Err(Error::BlowUp { .. }) if spec.policy == BlowUpPolicy::DropPath => {}
                Err(e) => return Err(e),
            }
        }
        Some(WeightedSamples::uniform(d, flat)?)
    } else {
        None
    };

    let rho = model.metadata().rho.unwrap_or_else(|| {
        notes.push("model has no known rate rho; burn-in uses rho = 1".into());
        1.0
    });
    let gammas: Vec<f64> = spec.checkpoints.iter().map(|&n| if n == 0 { f64::NAN } else { schedule.gamma(n).unwrap() }).collect();
    let min_gamma = gammas.iter().copied().filter(|g| g.is_finite()).fold(f64::INFINITY, f64::min);
    let t_burn = spec.t_burn.unwrap_or(if min_gamma < 1.0 { -min_gamma.ln() / rho } else { 0.0 });
    let varpi = schedule.varpi();
    if varpi.value == 0.0 {
        notes.push("varpi = 0 accepted (rate statements differ on whether the endpoint is allowed)".into());
    }
    if !(varpi.value < rho) {
        notes.push(format!("varpi = {} is not below rho = {rho}", varpi.value));
    }

    let n_kept = paths.len();
    let batches = spec.n_batches.max(1);
    let mut points = Vec::with_capacity(spec.checkpoints.len());
    for (c, &n) in spec.checkpoints.iter().enumerate() {
        let mut chain_pts = Vec::with_capacity(n_kept * d);
        let mut target_pts = Vec::new();
        for p in &paths {
            chain_pts.extend_from_slice(&p.chain[c * d..(c + 1) * d]);
            if !p.target.is_empty() {
                target_pts.extend_from_slice(&p.target[c * d..(c + 1) * d]);
            }
        }
        let chain = WeightedSamples::uniform(d, chain_pts)?;
        let coupled = if target_pts.is_empty() { None } else { Some(WeightedSamples::uniform(d, target_pts)?) };
        let against = match (&spec.target, &coupled, &reference) {
            (Target::Analytic(l), _, _) => Against::Law(l.as_ref()),
            (_, Some(s), _) => Against::Samples(s),
            (_, None, Some(r)) => Against::Samples(r),
            _ => unreachable!(),
        };
        let res = if d == 1 {
            let mut vals = chain.points().to_vec();
            if let Against::Samples(s) = &against {
                vals.extend_from_slice(s.points());
            }
            let range = quantile_range(&mut vals);
            let k = spec.bins.unwrap_or_else(|| (n_kept as f64).cbrt().ceil() as usize).max(2);
            let edges = spec
                .edges
                .clone()
                .unwrap_or_else(|| (0..=k).map(|i| range.0 + (range.1 - range.0) * i as f64 / k as f64).collect());
            Resolution { edges: Some(edges), range: Some(range) }
        } else {
            Resolution { edges: None, range: None }
        };
        let value = measure(spec, &chain, &against, &res)?;
        let std_error = if batches >= 2 {
            let size = n_kept / batches;
            let vals: Vec<f64> = (0..batches)
                .map(|b| {
                    let r = b * size..(b + 1) * size;
                    let sub = subset(&chain, r.clone());
                    match &against {
                        Against::Samples(s) if coupled.is_some() => measure(spec, &sub, &Against::Samples(&subset(s, r)), &res),
                        a => measure(spec, &sub, a, &res),
                    }
                })
                .collect::<Result<_>>()?;
            let m = vals.iter().sum::<f64>() / batches as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (batches - 1) as f64;
            (var / batches as f64).sqrt()
        } else {
            f64::NAN
        };
        let gamma_sum = schedule.gamma_sum(n)?;
        points.push(LongRunPoint {
            n,
            gamma: gammas[c],
            gamma_sum,
            value,
            std_error,
            past_burn_in: n > 0 && gamma_sum >= t_burn,
        });
    }

    let pairs: Vec<(f64, f64)> =
        points.iter().filter(|p| p.past_burn_in && p.value > 0.0).map(|p| (p.gamma, p.value)).collect();
    let fit = if pairs.len() >= 3 {
        Some(rate_fit(&pairs)?)
    } else {
        notes.push(format!("only {} checkpoints past burn-in: no rate fit", pairs.len()));
        None
    };
    Ok(LongRunResult {
        points,
        fit,
        t_burn,
        rho,
        varpi,
        estimator: spec.distance,
        target: spec.target.tag(),
        approximate_target: matches!(spec.target, Target::ReferenceSample { .. }),
        paths: n_kept,
        dropped,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Gaussian1d;
    use crate::model::Ou;
    use std::f64::consts::SQRT_2;

    #[test]
    fn coupled_ou_target_is_invariant_at_every_checkpoint() {
        let ou = Ou::new(1.0, SQRT_2, 1).unwrap();
        let schedule = StepSchedule::polynomial(0.5, 0.9, 300).unwrap();
        let spec = LongRunSpec::new(vec![0, 10, 300], 4000, vec![0.0], Target::CoupledExactOu { alpha: 1.0, sigma: SQRT_2 }, Estimator::W1Exact1d, 3);
        let ou_steps: Vec<ExactOuStep> = (1..=300).map(|k| ExactOuStep::new(1.0, schedule.gamma(k).unwrap())).collect();
        let ys: Vec<Vec<f64>> = (0..4000).map(|p| simulate_path(&ou, &schedule, &spec, &ou_steps, p).unwrap().target).collect();
        for c in 0..3 {
            let v = ys.iter().map(|y| y[c] * y[c]).sum::<f64>() / 4000.0;
            // sample variance of 4000 N(0,1) draws has sd ≈ √(2/4000)
            assert!((v - 1.0).abs() < 4.0 * (2.0f64 / 4000.0).sqrt(), "{c}: {v}");
        }
    }

    #[test]
    fn validation() {
        let ou = Ou::new(1.0, 1.0, 1).unwrap();
        let schedule = StepSchedule::polynomial(0.5, 0.9, 100).unwrap();
        let law: Arc<dyn Law1d + Send + Sync> = Arc::new(Gaussian1d::new(0.0, 0.5f64.sqrt()).unwrap());
        let base = LongRunSpec::new(vec![10, 200], 100, vec![0.0], Target::Analytic(law.clone()), Estimator::W1Exact1d, 1);
        assert!(matches!(
            long_run_rate_experiment(&ou, &schedule, &base),
            Err(Error::CheckpointBeyondHorizon { checkpoint: 200, horizon: 100 })
        ));
        let mut s = base.clone();
        s.checkpoints = vec![50, 10];
        assert!(long_run_rate_experiment(&ou, &schedule, &s).is_err());
        let mut s = base;
        s.checkpoints = vec![10, 50, 100];
        s.distance = Estimator::TvQuadrature;
        assert!(long_run_rate_experiment(&ou, &schedule, &s).is_err());
    }
}
