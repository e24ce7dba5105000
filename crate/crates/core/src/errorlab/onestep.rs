use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Diffusion;
use crate::ou_oracle::ExactOuStep;
use crate::scheme::{euler_update, BlowUpPolicy, NoiseSource, StepBuffers};

/// Largest fine grid the weak-error Richardson loop may use.
pub const RICHARDSON_CAP: usize = 1 << 14;

/// Salt mixed into the seed for noise that must be independent of the
/// Brownian path (second Gaussian of the exact OU step, unpaired runs).
const AUX_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stand-in for the true diffusion over one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Reference {
    /// Euler on `n_substeps` equal sub-intervals, driven by the fine
    /// increments whose sum is the coarse increment.
    FineGrid { n_substeps: usize },
    /// Exact transition of `dX = −αX dt + σ dW`, driven by the coarse
    /// increment plus independent noise.
    ExactOu { alpha: f64, sigma: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OneStepSpec {
    pub n_paths: usize,
    pub seed: u64,
    pub policy: BlowUpPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub gamma: f64,
    pub error: f64,
    pub std_error: f64,
    pub paths: usize,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakErrorEstimate {
    pub gamma: f64,
    pub error: f64,
    pub std_error: f64,
    /// Fine grid of the final reference (0 for an exact reference).
    pub n_substeps: usize,
    /// `|mean g(X^m) − mean g(X^{2m})|` at the final level.
    pub richardson_bias: f64,
    pub inconclusive: bool,
    pub paths: usize,
    pub dropped: usize,
}

/// Draws `m` fine increments of size `gamma / m` and their left-to-right
/// sum, the coarse increment over `[0, gamma]`.
pub fn coupled_increments(noise: &mut NoiseSource, gamma: f64, m: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut fine = vec![0.0; m * q];
    let h = gamma / m as f64;
    for chunk in fine.chunks_exact_mut(q) {
        noise.increments(h, chunk);
    }
    let mut coarse = vec![0.0; q];
    for chunk in fine.chunks_exact(q) {
        for (c, f) in coarse.iter_mut().zip(chunk) {
            *c += f;
        }
    }
    (fine, coarse)
}

fn check(model: &dyn Diffusion, x: &[f64], gamma: f64, n_paths: usize) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.len(), context: "initial point" });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("step must be > 0 (got {gamma})")));
    }
    if n_paths < 2 {
        return Err(Error::invalid("need at least 2 paths"));
    }
    Ok(())
}

fn check_reference(model: &dyn Diffusion, reference: Reference) -> Result<()> {
    match reference {
        Reference::FineGrid { n_substeps } if n_substeps < 32 => {
            Err(Error::invalid(format!("fine reference needs n_substeps >= 32 (got {n_substeps})")))
        }
        Reference::ExactOu { .. } if model.dim() != model.noise_dim() => {
            Err(Error::invalid("exact OU reference needs q = d"))
        }
        Reference::ExactOu { alpha, sigma } if !(alpha > 0.0 && sigma > 0.0) => {
            Err(Error::invalid("exact OU reference needs alpha > 0 and sigma > 0"))
        }
        _ => Ok(()),
    }
}

fn euler_path(model: &dyn Diffusion, x: &mut [f64], h: f64, increments: &[f64], buf: &mut StepBuffers) -> bool {
    increments.chunks_exact(model.noise_dim()).all(|dw| euler_update(model, x, h, dw, buf))
}

/// One coarse Euler step and the reference endpoint on a shared path.
fn coupled_pair(
    model: &dyn Diffusion,
    x: &[f64],
    gamma: f64,
    reference: Reference,
    seed: u64,
    path: u64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let q = model.noise_dim();
    let mut noise = NoiseSource::new(seed, path);
    let mut buf = StepBuffers::new(model);
    let mut coarse = x.to_vec();
    match reference {
        Reference::FineGrid { n_substeps } => {
            let (fine_inc, dw) = coupled_increments(&mut noise, gamma, n_substeps, q);
            let mut fine = x.to_vec();
            let ok = euler_path(model, &mut fine, gamma / n_substeps as f64, &fine_inc, &mut buf)
                && euler_update(model, &mut coarse, gamma, &dw, &mut buf);
            ok.then_some((coarse, fine))
        }
        Reference::ExactOu { alpha, sigma } => {
            let mut dw = vec![0.0; q];
            noise.increments(gamma, &mut dw);
            let mut aux = NoiseSource::new(seed ^ AUX_SALT, path);
            let step = ExactOuStep::new(alpha, gamma);
            let exact: Vec<f64> = x.iter().zip(&dw).map(|(&xi, &w)| step.apply(xi, sigma, w, aux.standard_normal())).collect();
            euler_update(model, &mut coarse, gamma, &dw, &mut buf).then_some((coarse, exact))
        }
    }
}

fn gather<T: Send>(results: Vec<Option<T>>, policy: BlowUpPolicy, n: usize) -> Result<(Vec<T>, usize)> {
    let mut kept = Vec::with_capacity(n);
    let mut dropped = 0;
    for r in results {
        match r {
            Some(v) => kept.push(v),
            None if policy == BlowUpPolicy::DropPath => dropped += 1,
            None => return Err(Error::BlowUp { n: 1, x: Vec::new() }),
        }
    }
    if kept.len() < 2 {
        return Err(Error::invalid("fewer than 2 paths survived"));
    }
    Ok((kept, dropped))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// `‖X_γ − X̄_γ‖_p = (E|X_γ − X̄_γ|^p)^{1/p}` on coupled paths, with a
/// delta-method standard error.
pub fn one_step_strong_error(
    model: &dyn Diffusion,
    x: &[f64],
    gamma: f64,
    p: u32,
    reference: Reference,
    spec: &OneStepSpec,
) -> Result<ErrorEstimate> {
    check(model, x, gamma, spec.n_paths)?;
    check_reference(model, reference)?;
    if ![1, 2, 4].contains(&p) {
        return Err(Error::invalid(format!("p must be 1, 2 or 4 (got {p})")));
    }
    let raw: Vec<Option<f64>> = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            coupled_pair(model, x, gamma, reference, spec.seed, path).map(|(c, f)| {
                let dist = c.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                dist.powi(p as i32)
            })
        })
        .collect();
    let (values, dropped) = gather(raw, spec.policy, spec.n_paths)?;
    let (m, sd) = mean_sd(&values);
    let pf = p as f64;
    let error = m.powf(1.0 / pf);
    let std_error = if m > 0.0 { error / (pf * m) * sd / (values.len() as f64).sqrt() } else { 0.0 };
    Ok(ErrorEstimate { gamma, error, std_error, paths: values.len(), dropped })
}

/// Per-path `(g(X̄_γ), g(X^m_γ), g(X^{2m}_γ))` from one fine path of `2m`
/// increments. The coarse step takes `coarse_seed`'s path so it can be
/// decoupled from the reference.
fn richardson_triple(
    model: &dyn Diffusion,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    gamma: f64,
    m: usize,
    seed: u64,
    coarse_seed: u64,
    path: u64,
) -> Option<(f64, f64, f64)> {
    let q = model.noise_dim();
    let mut buf = StepBuffers::new(model);
    let (fine2, dw) = coupled_increments(&mut NoiseSource::new(seed, path), gamma, 2 * m, q);
    let mut fine1 = vec![0.0; m * q];
    for (k, out) in fine1.chunks_exact_mut(q).enumerate() {
        for j in 0..q {
            out[j] = fine2[2 * k * q + j] + fine2[(2 * k + 1) * q + j];
        }
    }
    let mut x2 = x.to_vec();
    let mut x1 = x.to_vec();
    let h = gamma / m as f64;
    if !euler_path(model, &mut x2, 0.5 * h, &fine2, &mut buf) || !euler_path(model, &mut x1, h, &fine1, &mut buf) {
        return None;
    }
    let dw = if coarse_seed == seed {
        dw
    } else {
        let mut other = vec![0.0; q];
        NoiseSource::new(coarse_seed, path).increments(gamma, &mut other);
        other
    };
    let mut xc = x.to_vec();
    euler_update(model, &mut xc, gamma, &dw, &mut buf).then(|| (g(&xc), g(&x1), g(&x2)))
}

/// `|E g(X̄_γ) − E g(X_γ)|`.
///
/// With a fine-grid reference the grid starts at `n_substeps` and doubles
/// until the Richardson difference between `m` and `2m` sub-steps falls
/// below 10% of the measured error; past [`RICHARDSON_CAP`] the result is
/// flagged inconclusive. `paired = false` drives the coarse step with
/// independent noise, for comparison.
pub fn one_step_weak_error(
    model: &dyn Diffusion,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    gamma: f64,
    reference: Reference,
    paired: bool,
    spec: &OneStepSpec,
) -> Result<WeakErrorEstimate> {
    check(model, x, gamma, spec.n_paths)?;
    check_reference(model, reference)?;
    let coarse_seed = if paired { spec.seed } else { spec.seed ^ AUX_SALT.rotate_left(17) };
    let n = spec.n_paths;

    let summarize = |pairs: &[(f64, f64)]| {
        let c: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let r: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let (md, sdd) = mean_sd(&diff);
        let se = if paired {
            sdd / (pairs.len() as f64).sqrt()
        } else {
            let (sc, sr) = (mean_sd(&c).1, mean_sd(&r).1);
            ((sc * sc + sr * sr) / pairs.len() as f64).sqrt()
        };
        (md.abs(), se)
    };

    if let Reference::ExactOu { .. } = reference {
        let raw: Vec<Option<(f64, f64)>> = (0..n as u64)
            .into_par_iter()
            .map(|path| {
                let (_, exact) = coupled_pair(model, x, gamma, reference, spec.seed, path)?;
                let (coarse, _) = coupled_pair(model, x, gamma, reference, coarse_seed, path)?;
                Some((g(&coarse), g(&exact)))
            })
            .collect();
        let (pairs, dropped) = gather(raw, spec.policy, n)?;
        let (error, std_error) = summarize(&pairs);
        return Ok(WeakErrorEstimate {
            gamma,
            error,
            std_error,
            n_substeps: 0,
            richardson_bias: 0.0,
            inconclusive: false,
            paths: pairs.len(),
            dropped,
        });
    }

    let Reference::FineGrid { n_substeps } = reference else { unreachable!() };
    let mut m = n_substeps;
    loop {
        let raw: Vec<Option<(f64, f64, f64)>> = (0..n as u64)
            .into_par_iter()
            .map(|path| richardson_triple(model, g, x, gamma, m, spec.seed, coarse_seed, path))
            .collect();
        let (triples, dropped) = gather(raw, spec.policy, n)?;
        let pairs: Vec<(f64, f64)> = triples.iter().map(|t| (t.0, t.2)).collect();
        let (error, std_error) = summarize(&pairs);
        let bias = (triples.iter().map(|t| t.1 - t.2).sum::<f64>() / triples.len() as f64).abs();
        let done = bias <= 0.1 * error;
        let capped = 4 * m > RICHARDSON_CAP;
        if done || capped {
            return Ok(WeakErrorEstimate {
                gamma,
                error,
                std_error,
                n_substeps: 2 * m,
                richardson_bias: bias,
                inconclusive: !done,
                paths: triples.len(),
                dropped,
            });
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, Ou};

    fn spec(n: usize) -> OneStepSpec {
        OneStepSpec { n_paths: n, seed: 4, policy: BlowUpPolicy::Abort }
    }

    #[test]
    fn brownian_motion_has_no_strong_error() {
        let m = FnModel::scalar(|_| 0.0, |_| 0.7);
        let e = one_step_strong_error(&m, &[0.3], 0.1, 2, Reference::FineGrid { n_substeps: 32 }, &spec(100)).unwrap();
        assert!(e.error < 1e-15, "{e:?}");
    }

    #[test]
    fn coarse_increment_is_the_fine_sum() {
        let (fine, coarse) = coupled_increments(&mut NoiseSource::new(3, 1), 0.25, 64, 2);
        let mut s = [0.0, 0.0];
        for c in fine.chunks_exact(2) {
            s[0] += c[0];
            s[1] += c[1];
        }
        assert_eq!(coarse[0].to_bits(), s[0].to_bits());
        assert_eq!(coarse[1].to_bits(), s[1].to_bits());
    }

    #[test]
    fn linear_test_function_without_drift() {
        let m = FnModel::scalar(|_| 0.0, |_| 1.0);
        let e = one_step_weak_error(&m, &|x| 2.0 * x[0] + 1.0, &[0.5], 0.2, Reference::FineGrid { n_substeps: 32 }, true, &spec(2000))
            .unwrap();
        assert!(e.error <= 3.0 * e.std_error + 1e-14, "{e:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let ou = Ou::new(1.0, 1.0, 1).unwrap();
        let s = spec(10);
        assert!(one_step_strong_error(&ou, &[0.0], 0.1, 3, Reference::FineGrid { n_substeps: 32 }, &s).is_err());
        assert!(one_step_strong_error(&ou, &[0.0], 0.1, 2, Reference::FineGrid { n_substeps: 8 }, &s).is_err());
        assert!(one_step_strong_error(&ou, &[0.0], -0.1, 2, Reference::FineGrid { n_substeps: 32 }, &s).is_err());
    }
}
