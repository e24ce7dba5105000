//! Euler discretization of the tangent process
//! `dY = ∇b(X) Y dt + Σ_j ∇σ_{·j}(X) Y dW^j`, `Y_0 = I`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Diffusion, JacobianSupport};

/// `Y`, a row-major `d × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentState {
    pub d: usize,
    pub y: Vec<f64>,
}

impl TangentState {
    pub fn identity(d: usize) -> Self {
        let mut y = vec![0.0; d * d];
        for i in 0..d {
            y[i * d + i] = 1.0;
        }
        TangentState { d, y }
    }

    pub fn determinant(&self) -> f64 {
        match self.d {
            1 => self.y[0],
            2 => self.y[0] * self.y[3] - self.y[1] * self.y[2],
            d => DMatrix::from_row_slice(d, d, &self.y).determinant(),
        }
    }

    /// Entry `(i, k) = ∂X^i/∂x_k`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.y[i * self.d + k]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TangentBuffers {
    drift_jac: Vec<f64>,
    sigma_jac: Vec<f64>,
    next: Vec<f64>,
    prod: Vec<f64>,
}

impl TangentBuffers {
    pub(crate) fn new(d: usize, q: usize) -> Self {
        TangentBuffers { drift_jac: vec![0.0; d * d], sigma_jac: vec![0.0; q * d * d], next: vec![0.0; d * d], prod: vec![0.0; d * d] }
    }
}

/// In-place tangent update at the pre-step point `x`.
pub(crate) fn tangent_update(
    model: &dyn Diffusion,
    y: &mut [f64],
    x: &[f64],
    dt: f64,
    dw: &[f64],
    buf: &mut TangentBuffers,
) {
    let d = x.len();
    let q = dw.len();
    model.drift_jacobian(x, &mut buf.drift_jac);
    model.diffusion_jacobian(x, &mut buf.sigma_jac);
    // M = I + dt ∇b + Σ_j ∇σ_{·j} ΔW^j, then Y ← M Y
    let next = &mut buf.next;
    for i in 0..d {
        for k in 0..d {
            let mut m = dt * buf.drift_jac[i * d + k];
            for j in 0..q {
                m += buf.sigma_jac[(j * d + i) * d + k] * dw[j];
            }
            if i == k {
                m += 1.0;
            }
            next[i * d + k] = m;
        }
    }
    let prod = &mut buf.prod;
    for i in 0..d {
        for k in 0..d {
            prod[i * d + k] = (0..d).map(|l| next[i * d + l] * y[l * d + k]).sum();
        }
    }
    y.copy_from_slice(prod);
}

pub fn tangent_step(y: &TangentState, model: &dyn Diffusion, x: &[f64], dt: f64, dw: &[f64]) -> Result<TangentState> {
    if model.jacobians() == JacobianSupport::None {
        return Err(Error::MissingJacobian);
    }
    let d = model.dim();
    if y.d != d || x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len(), context: "tangent state" });
    }
    if dw.len() != model.noise_dim() {
        return Err(Error::DimensionMismatch { expected: model.noise_dim(), got: dw.len(), context: "noise increment" });
    }
    let mut out = y.clone();
    let mut buf = TangentBuffers::new(d, model.noise_dim());
    tangent_update(model, &mut out.y, x, dt, dw, &mut buf);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, Ou};

    #[test]
    fn frozen_model_keeps_identity() {
        let m = FnModel::new(2, 2, |_, o| o.fill(0.0), |_, o| o.fill(0.0));
        let y = tangent_step(&TangentState::identity(2), &m, &[1.0, 2.0], 0.1, &[0.3, -0.2]).unwrap();
        assert_eq!(y, TangentState::identity(2));
        assert_eq!(y.determinant(), 1.0);
    }

    #[test]
    fn ou_tangent_is_geometric() {
        let (alpha, h, k) = (1.5, 0.01, 50);
        let m = Ou::new(alpha, 1.0, 2).unwrap();
        let mut y = TangentState::identity(2);
        for _ in 0..k {
            y = tangent_step(&y, &m, &[0.3, 0.1], h, &[0.0, 0.0]).unwrap();
        }
        let expect = (1.0 - alpha * h).powi(k);
        assert!((y.get(0, 0) - expect).abs() < 1e-14);
        assert!((y.get(1, 1) - expect).abs() < 1e-14);
        assert_eq!(y.get(0, 1), 0.0);
        assert!((y.determinant() - expect * expect).abs() < 1e-14);
    }

    #[test]
    fn missing_jacobians_are_an_error() {
        let m = FnModel::scalar(|x| -x, |_| 1.0).without_jacobians();
        assert!(matches!(
            tangent_step(&TangentState::identity(1), &m, &[0.0], 0.1, &[0.0]),
            Err(Error::MissingJacobian)
        ));
    }
}
