//! Diffusion models `dX_t = b(X_t) dt + σ(X_t) dW_t`.
//!
//! A model is a pure function pair (drift, diffusion field) behind the
//! [`Diffusion`] trait. Matrices are passed as row-major slices: the
//! diffusion `σ(x)` is `d × q`, the drift Jacobian is `d × d`, and the
//! diffusion Jacobian is stored column by column (`q` blocks of `d × d`,
//! entry `[j][i][k] = ∂σ_ij/∂x_k`).

mod builtin;
mod checks;
mod gibbs;

pub use builtin::{
    build_model, FnModel, GibbsMultiplicative, GradientLangevin, HeavyTail, HeavyTailPotential, ModelSpec, Ou,
    RadialSqrtField,
};
pub use checks::{
    check_dissipativity, check_ellipticity, check_mean_reversion, DissipativityReport, EllipticityReport,
    MeanReversionReport, ProbeRegion,
};
pub use gibbs::{gibbs_drift, ConstantField, Potential, SigmaField};

use serde::Serialize;

/// How a model exposes the derivatives used by the tangent process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JacobianSupport {
    Analytic,
    FiniteDifference,
    None,
}

/// Known constants of a model, when they are available in closed form.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ModelMetadata {
    pub name: String,
    /// Contraction constant `α` of the uniform dissipativity condition.
    pub contraction: Option<f64>,
    /// Exponential rate `ρ` of the W₁ confluence of the semigroup.
    pub rho: Option<f64>,
    /// Ellipticity bound `σ₀²` with `σσ* ⪰ σ₀² I`.
    pub sigma0_sq: Option<f64>,
    /// `(α, β)` with `(∇V | b) ≤ β − αV` for the model's Lyapunov function.
    pub mean_reversion: Option<(f64, f64)>,
    /// Constant diffusion coefficient.
    pub additive: bool,
}

pub trait Lyapunov: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// `W_α(x) = (1 + |x|²)^α`; `α = 1` gives the usual quadratic function.
#[derive(Clone, Copy, Debug)]
pub struct PowerLyapunov {
    pub alpha: f64,
}

impl PowerLyapunov {
    pub const QUADRATIC: PowerLyapunov = PowerLyapunov { alpha: 1.0 };
}

impl Lyapunov for PowerLyapunov {
    fn value(&self, x: &[f64]) -> f64 {
        (1.0 + norm_sq(x)).powf(self.alpha)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s = 1.0 + norm_sq(x);
        let c = 2.0 * self.alpha * s.powf(self.alpha - 1.0);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }
}

pub trait Diffusion: Send + Sync {
    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Noise dimension `q`.
    fn noise_dim(&self) -> usize;

    fn drift(&self, x: &[f64], out: &mut [f64]);

    /// `σ(x)` as a row-major `d × q` matrix.
    fn diffusion(&self, x: &[f64], out: &mut [f64]);

    fn jacobians(&self) -> JacobianSupport {
        JacobianSupport::FiniteDifference
    }

    /// `∇b(x)`, row-major `d × d`, `out[i*d + k] = ∂b_i/∂x_k`.
    fn drift_jacobian(&self, x: &[f64], out: &mut [f64]) {
        fd_drift_jacobian(self, x, out)
    }

    /// `∂σ_ij/∂x_k` stored at `out[(j*d + i)*d + k]`.
    fn diffusion_jacobian(&self, x: &[f64], out: &mut [f64]) {
        fd_diffusion_jacobian(self, x, out)
    }

    fn lyapunov(&self) -> Option<&dyn Lyapunov> {
        None
    }

    fn metadata(&self) -> ModelMetadata {
        ModelMetadata::default()
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn fd_step(v: f64) -> f64 {
    1e-5 * v.abs().max(1.0)
}

pub fn fd_drift_jacobian<M: Diffusion + ?Sized>(model: &M, x: &[f64], out: &mut [f64]) {
    let d = model.dim();
    let mut xp = x.to_vec();
    let mut bp = vec![0.0; d];
    let mut bm = vec![0.0; d];
    for k in 0..d {
        let h = fd_step(x[k]);
        xp[k] = x[k] + h;
        model.drift(&xp, &mut bp);
        xp[k] = x[k] - h;
        model.drift(&xp, &mut bm);
        xp[k] = x[k];
        for i in 0..d {
            out[i * d + k] = (bp[i] - bm[i]) / (2.0 * h);
        }
    }
}

pub fn fd_diffusion_jacobian<M: Diffusion + ?Sized>(model: &M, x: &[f64], out: &mut [f64]) {
    let d = model.dim();
    let q = model.noise_dim();
    let mut xp = x.to_vec();
    let mut sp = vec![0.0; d * q];
    let mut sm = vec![0.0; d * q];
    for k in 0..d {
        let h = fd_step(x[k]);
        xp[k] = x[k] + h;
        model.diffusion(&xp, &mut sp);
        xp[k] = x[k] - h;
        model.diffusion(&xp, &mut sm);
        xp[k] = x[k];
        for i in 0..d {
            for j in 0..q {
                out[(j * d + i) * d + k] = (sp[i * q + j] - sm[i * q + j]) / (2.0 * h);
            }
        }
    }
}

/// `σσ*(x)` as a row-major `d × d` matrix.
pub fn covariance(sigma: &[f64], d: usize, q: usize, out: &mut [f64]) {
    for i in 0..d {
        for k in 0..d {
            let mut s = 0.0;
            for j in 0..q {
                s += sigma[i * q + j] * sigma[k * q + j];
            }
            out[i * d + k] = s;
        }
    }
}
