use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::quad;
use crate::error::{Error, Result};

/// A one-dimensional probability law with finite mean.
pub trait Law1d: Sync {
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, u: f64) -> f64;
    fn mean(&self) -> f64;

    /// `E(c − Y)⁺ = ∫_{−∞}^c F(x) dx`.
    fn lower_partial_mean(&self, c: f64) -> f64 {
        quad::integrate_lower(&|x| self.cdf(x), c, 1e-13)
    }
}

/// `N(mean, sd²)`.
#[derive(Clone, Debug)]
pub struct Gaussian1d {
    pub mean: f64,
    pub sd: f64,
    normal: Normal,
}

impl Gaussian1d {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        if !(sd > 0.0) || !mean.is_finite() {
            return Err(Error::invalid(format!("Gaussian needs finite mean and sd > 0 (got {mean}, {sd})")));
        }
        Ok(Gaussian1d { mean, sd, normal })
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl Law1d for Gaussian1d {
    fn cdf(&self, x: f64) -> f64 {
        self.normal.cdf((x - self.mean) / self.sd)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.mean + self.sd * self.normal.inverse_cdf(u)
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn lower_partial_mean(&self, c: f64) -> f64 {
        let z = (c - self.mean) / self.sd;
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        (c - self.mean) * self.normal.cdf(z) + self.sd * phi
    }
}

/// Centered Student law with `dof` degrees of freedom and scale `scale`.
///
/// With `dof = 1 + 2κ` and `scale = 1/√dof` this is the invariant law
/// `∝ (1 + x²)^{−(1+κ)}` of the one-dimensional heavy-tailed model.
#[derive(Clone, Debug)]
pub struct ScaledStudentT {
    pub dof: f64,
    pub scale: f64,
    dist: StudentsT,
}

impl ScaledStudentT {
    pub fn new(dof: f64, scale: f64) -> Result<Self> {
        if !(dof > 1.0) || !(scale > 0.0) {
            return Err(Error::invalid(format!("Student law needs dof > 1 and scale > 0 (got {dof}, {scale})")));
        }
        let dist = StudentsT::new(0.0, scale, dof).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(ScaledStudentT { dof, scale, dist })
    }

    pub fn heavy_tail_invariant(kappa: f64) -> Result<Self> {
        let dof = 1.0 + 2.0 * kappa;
        Self::new(dof, 1.0 / dof.sqrt())
    }
}

impl Law1d for ScaledStudentT {
    fn cdf(&self, x: f64) -> f64 {
        self.dist.cdf(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.dist.inverse_cdf(u)
    }

    fn mean(&self) -> f64 {
        0.0
    }
}
