//! Drift of a multiplicative-noise diffusion with prescribed Gibbs
//! invariant law `ν_V ∝ e^{−V}`:
//!
//! ```text
//! b = −½ ( (σσ*) ∇V − [ Σ_j ∂_{x_j} (σσ*)_{ij} ]_{i=1..d} )
//! ```

use super::covariance;
use crate::error::{Error, Result};

/// A potential `V` known through its gradient.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn value(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// A diffusion coefficient field `x ↦ σ(x)` (`d × q`, row-major).
pub trait SigmaField: Send + Sync {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn sigma(&self, x: &[f64], out: &mut [f64]);

    /// Analytic `∂_k (σσ*)_{ij}` written at `out[(i*d + j)*d + k]`.
    /// Returns `false` when not available, in which case central finite
    /// differences are used.
    fn covariance_jacobian(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Analytic `∂_k σ_ij` written at `out[(j*d + i)*d + k]`.
    fn sigma_jacobian(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// A constant diffusion matrix.
#[derive(Clone, Debug)]
pub struct ConstantField {
    pub d: usize,
    pub q: usize,
    pub matrix: Vec<f64>,
}

impl ConstantField {
    pub fn scaled_identity(d: usize, scale: f64) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = scale;
        }
        ConstantField { d, q: d, matrix }
    }
}

impl SigmaField for ConstantField {
    fn dim(&self) -> usize {
        self.d
    }
    fn noise_dim(&self) -> usize {
        self.q
    }
    fn sigma(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matrix);
    }
    fn covariance_jacobian(&self, _x: &[f64], out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }
    fn sigma_jacobian(&self, _x: &[f64], out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }
}

/// Finite-difference step for the `σσ*` derivatives.
pub(crate) fn gibbs_fd_step(x: &[f64]) -> f64 {
    let norm = super::norm_sq(x).sqrt();
    f64::max(1e-5, 1e-5 * norm)
}

/// `[Σ_j ∂_{x_j} (σσ*)_{ij}]_i`, analytic when the field provides it.
pub(crate) fn covariance_divergence(field: &dyn SigmaField, x: &[f64], force_fd: bool, out: &mut [f64]) {
    let d = field.dim();
    let q = field.noise_dim();
    if !force_fd {
        let mut jac = vec![0.0; d * d * d];
        if field.covariance_jacobian(x, &mut jac) {
            for i in 0..d {
                out[i] = (0..d).map(|j| jac[(i * d + j) * d + j]).sum();
            }
            return;
        }
    }
    let h = gibbs_fd_step(x);
    let mut xp = x.to_vec();
    let mut s = vec![0.0; d * q];
    let mut ap = vec![0.0; d * d];
    let mut am = vec![0.0; d * d];
    out.fill(0.0);
    for j in 0..d {
        xp[j] = x[j] + h;
        field.sigma(&xp, &mut s);
        covariance(&s, d, q, &mut ap);
        xp[j] = x[j] - h;
        field.sigma(&xp, &mut s);
        covariance(&s, d, q, &mut am);
        xp[j] = x[j];
        for i in 0..d {
            out[i] += (ap[i * d + j] - am[i * d + j]) / (2.0 * h);
        }
    }
}

/// Evaluates the Gibbs drift at `x` into `out`.
pub fn gibbs_drift(potential: &dyn Potential, field: &dyn SigmaField, x: &[f64], out: &mut [f64]) -> Result<()> {
    gibbs_drift_with(potential, field, x, false, out)
}

pub(crate) fn gibbs_drift_with(
    potential: &dyn Potential,
    field: &dyn SigmaField,
    x: &[f64],
    force_fd: bool,
    out: &mut [f64],
) -> Result<()> {
    let d = field.dim();
    let q = field.noise_dim();
    if potential.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: potential.dim(), context: "potential gradient" });
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len(), context: "gibbs_drift point" });
    }
    if out.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: out.len(), context: "gibbs_drift output" });
    }
    let mut grad = vec![0.0; d];
    potential.gradient(x, &mut grad);
    let mut s = vec![0.0; d * q];
    field.sigma(x, &mut s);
    let mut a = vec![0.0; d * d];
    covariance(&s, d, q, &mut a);
    let mut div = vec![0.0; d];
    covariance_divergence(field, x, force_fd, &mut div);
    for i in 0..d {
        let a_grad: f64 = (0..d).map(|j| a[i * d + j] * grad[j]).sum();
        out[i] = -0.5 * (a_grad - div[i]);
    }
    Ok(())
}
