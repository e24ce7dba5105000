//! Monte Carlo gradient of the semigroup via the Bismut–Elworthy–Li weight
//!
//! ```text
//! ∇_x P_t f(x) = E[ f(X_t^x) · (1/t) ∫_0^t (σ(X_s)^{-1} Y_s)^* dW_s ]
//! ```
//!
//! with `σ^{-1} = σ*(σσ*)^{-1}` the right inverse and `Y` the tangent
//! process. `X`, `Y` and the Itô sum are all discretized on a uniform grid
//! of `n_substeps` Euler steps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::chain::{euler_update, StepBuffers};
use super::noise::NoiseSource;
use super::tangent::{tangent_update, TangentBuffers};
use crate::error::{Error, Result};
use crate::model::{covariance, Diffusion, JacobianSupport};

/// Pivot below which `σσ*` is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct BelEstimate {
    pub gradient: Vec<f64>,
    pub std_error: Vec<f64>,
    pub paths: usize,
    pub rejected: usize,
}

enum PathOutcome {
    Weighted(Vec<f64>),
    Singular,
}

fn check_inputs(model: &dyn Diffusion, x: &[f64], t: f64, n_paths: usize, n_substeps: usize) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.len(), context: "initial point" });
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be > 0 (got {t})")));
    }
    if n_paths < 2 || n_substeps < 1 {
        return Err(Error::invalid("need n_paths >= 2 and n_substeps >= 1"));
    }
    Ok(())
}

/// Solves `(σσ*) v = rhs`, or `None` when `σσ*` is numerically singular.
fn solve_covariance(a: &[f64], rhs: &[f64], d: usize) -> Option<Vec<f64>> {
    if d == 1 {
        return (a[0] > SINGULAR_PIVOT).then(|| vec![rhs[0] / a[0]]);
    }
    let m = DMatrix::from_row_slice(d, d, a);
    let chol = m.cholesky()?;
    let l = chol.l();
    if (0..d).any(|i| l[(i, i)] * l[(i, i)] <= SINGULAR_PIVOT) {
        return None;
    }
    Some(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
}

fn bel_path(
    model: &dyn Diffusion,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    t: f64,
    n_substeps: usize,
    seed: u64,
    path: u64,
) -> Result<PathOutcome> {
    let d = model.dim();
    let q = model.noise_dim();
    let h = t / n_substeps as f64;
    let mut noise = NoiseSource::new(seed, path);
    let mut x = x0.to_vec();
    let mut y = super::tangent::TangentState::identity(d).y;
    let mut weight = vec![0.0; d];
    let mut dw = vec![0.0; q];
    let mut sdw = vec![0.0; d];
    let mut a = vec![0.0; d * d];
    let mut buf = StepBuffers::new(model);
    let mut tbuf = TangentBuffers::new(d, q);
    for k in 0..n_substeps {
        noise.increments(h, &mut dw);
        model.diffusion(&x, &mut buf.sigma);
        covariance(&buf.sigma, d, q, &mut a);
        for i in 0..d {
            sdw[i] = (0..q).map(|j| buf.sigma[i * q + j] * dw[j]).sum();
        }
        // (σ^{-1} Y)^* ΔW = Y^* (σσ*)^{-1} σ ΔW
        let Some(v) = solve_covariance(&a, &sdw, d) else {
            return Ok(PathOutcome::Singular);
        };
        for kk in 0..d {
            weight[kk] += (0..d).map(|i| y[i * d + kk] * v[i]).sum::<f64>();
        }
        tangent_update(model, &mut y, &x, h, &dw, &mut tbuf);
        if !euler_update(model, &mut x, h, &dw, &mut buf) {
            return Err(Error::BlowUp { n: k as u64 + 1, x });
        }
    }
    let fx = f(&x);
    Ok(PathOutcome::Weighted(weight.iter().map(|w| fx * w / t).collect()))
}

pub fn bel_gradient(
    model: &dyn Diffusion,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    t: f64,
    n_paths: usize,
    n_substeps: usize,
    seed: u64,
) -> Result<BelEstimate> {
    check_inputs(model, x, t, n_paths, n_substeps)?;
    if model.jacobians() == JacobianSupport::None {
        return Err(Error::MissingJacobian);
    }
    let d = model.dim();
    let outcomes: Vec<Result<PathOutcome>> =
        (0..n_paths as u64).into_par_iter().map(|p| bel_path(model, f, x, t, n_substeps, seed, p)).collect();
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(n_paths);
    let mut rejected = 0;
    for o in outcomes {
        match o? {
            PathOutcome::Weighted(w) => kept.push(w),
            PathOutcome::Singular => rejected += 1,
        }
    }
    if rejected * 100 > n_paths {
        return Err(Error::SingularPaths { rejected, total: n_paths });
    }
    let n = kept.len() as f64;
    let mut gradient = vec![0.0; d];
    let mut std_error = vec![0.0; d];
    for i in 0..d {
        let mean = kept.iter().map(|w| w[i]).sum::<f64>() / n;
        let var = kept.iter().map(|w| (w[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        gradient[i] = mean;
        std_error[i] = (var / n).sqrt();
    }
    Ok(BelEstimate { gradient, std_error, paths: kept.len(), rejected })
}

/// Per-path values `f(X̄_t^x)` on the same grid and noise streams as
/// [`bel_gradient`], for common-random-number comparisons.
pub fn semigroup_samples(
    model: &dyn Diffusion,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    t: f64,
    n_paths: usize,
    n_substeps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_inputs(model, x, t, n_paths, n_substeps)?;
    let h = t / n_substeps as f64;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut noise = NoiseSource::new(seed, p);
            let mut state = x.to_vec();
            let mut dw = vec![0.0; model.noise_dim()];
            let mut buf = StepBuffers::new(model);
            for k in 0..n_substeps {
                noise.increments(h, &mut dw);
                if !euler_update(model, &mut state, h, &dw, &mut buf) {
                    return Err(Error::BlowUp { n: k as u64 + 1, x: state });
                }
            }
            Ok(f(&state))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, Ou};

    #[test]
    fn constant_function_has_zero_gradient() {
        let m = Ou::new(1.0, std::f64::consts::SQRT_2, 2).unwrap();
        let est = bel_gradient(&m, &|_| 3.0, &[0.2, -0.1], 1.0, 20_000, 20, 5).unwrap();
        for i in 0..2 {
            assert!(est.gradient[i].abs() < 3.0 * est.std_error[i], "{est:?}");
        }
    }

    #[test]
    fn singular_diffusion_is_rejected() {
        let m = FnModel::scalar(|x| -x, |_| 0.0);
        let err = bel_gradient(&m, &|x| x[0], &[1.0], 1.0, 100, 10, 1).unwrap_err();
        assert!(matches!(err, Error::SingularPaths { rejected: 100, total: 100 }));
    }

    #[test]
    fn input_validation() {
        let m = Ou::new(1.0, 1.0, 1).unwrap();
        assert!(bel_gradient(&m, &|x| x[0], &[1.0], 0.0, 100, 10, 1).is_err());
        assert!(bel_gradient(&m, &|x| x[0], &[1.0, 2.0], 1.0, 100, 10, 1).is_err());
        let bare = FnModel::scalar(|x| -x, |_| 1.0).without_jacobians();
        assert!(matches!(bel_gradient(&bare, &|x| x[0], &[1.0], 1.0, 100, 10, 1), Err(Error::MissingJacobian)));
    }
}
