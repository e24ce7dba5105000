//! Sampling-based probes of the model assumptions. A probe can exhibit a
//! violation; it never proves that a global condition holds, and every
//! report carries `empirical_only: true` to say so.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::builtin::model_covariance;
use super::{norm_sq, Diffusion};
use crate::error::{Error, Result};

/// Where probe points are drawn (uniformly).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProbeRegion {
    Ball { radius: f64 },
    /// `inner < |x| < outer`, for dissipativity outside a compact set.
    Annulus { inner: f64, outer: f64 },
}

impl ProbeRegion {
    fn validate(&self) -> Result<()> {
        match *self {
            ProbeRegion::Ball { radius } if radius > 0.0 => Ok(()),
            ProbeRegion::Annulus { inner, outer } if inner >= 0.0 && outer > inner => Ok(()),
            r => Err(Error::invalid(format!("invalid probe region {r:?}"))),
        }
    }

    fn sample(&self, d: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let (lo, hi) = match *self {
            ProbeRegion::Ball { radius } => (0.0, radius),
            ProbeRegion::Annulus { inner, outer } => (inner, outer),
        };
        loop {
            for o in out.iter_mut() {
                *o = rng.sample(StandardNormal);
            }
            let n = norm_sq(out).sqrt();
            if n > 0.0 {
                let df = d as f64;
                let u: f64 = rng.random();
                let r = (lo.powf(df) + u * (hi.powf(df) - lo.powf(df))).powf(1.0 / df);
                for o in out.iter_mut() {
                    *o *= r / n;
                }
                return;
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipativityReport {
    /// Largest observed `[(b(x)−b(y)|x−y) + ½‖σ(x)−σ(y)‖²_F] / |x−y|²`.
    pub estimate: f64,
    /// `α = −estimate` when the estimate is negative.
    pub satisfied_at: Option<f64>,
    pub pairs: usize,
    pub region: ProbeRegion,
    pub empirical_only: bool,
}

pub fn check_dissipativity(
    model: &dyn Diffusion,
    sample_count: usize,
    region: ProbeRegion,
    seed: u64,
) -> Result<DissipativityReport> {
    if sample_count < 2 {
        return Err(Error::invalid("check_dissipativity needs sample_count >= 2"));
    }
    region.validate()?;
    let d = model.dim();
    let q = model.noise_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let (mut bx, mut by) = (vec![0.0; d], vec![0.0; d]);
    let (mut sx, mut sy) = (vec![0.0; d * q], vec![0.0; d * q]);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..sample_count {
        let dist2 = loop {
            region.sample(d, &mut rng, &mut x);
            region.sample(d, &mut rng, &mut y);
            let dist2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 > 0.0 {
                break dist2;
            }
        };
        model.drift(&x, &mut bx);
        model.drift(&y, &mut by);
        model.diffusion(&x, &mut sx);
        model.diffusion(&y, &mut sy);
        let inner: f64 = (0..d).map(|i| (bx[i] - by[i]) * (x[i] - y[i])).sum();
        let frob: f64 = sx.iter().zip(&sy).map(|(a, b)| (a - b) * (a - b)).sum();
        worst = worst.max((inner + 0.5 * frob) / dist2);
    }
    Ok(DissipativityReport {
        estimate: worst,
        satisfied_at: (worst < 0.0).then_some(-worst),
        pairs: sample_count,
        region,
        empirical_only: true,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    /// Smallest eigenvalue of `σσ*` over the probed points.
    pub min_eigenvalue: f64,
    pub argmin: Vec<f64>,
    pub points: usize,
    pub empirical_only: bool,
}

pub fn check_ellipticity(model: &dyn Diffusion, sample_count: usize, radius: f64, seed: u64) -> Result<EllipticityReport> {
    if sample_count < 1 {
        return Err(Error::invalid("check_ellipticity needs sample_count >= 1"));
    }
    let region = ProbeRegion::Ball { radius };
    region.validate()?;
    let d = model.dim();
    let q = model.noise_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut s = vec![0.0; d * q];
    let mut a = vec![0.0; d * d];
    let mut best = (f64::INFINITY, vec![0.0; d]);
    for _ in 0..sample_count {
        region.sample(d, &mut rng, &mut x);
        model_covariance(model, &x, &mut s, &mut a);
        let lam = min_symmetric_eigenvalue(&a, d);
        if lam < best.0 {
            best = (lam, x.clone());
        }
    }
    Ok(EllipticityReport { min_eigenvalue: best.0, argmin: best.1, points: sample_count, empirical_only: true })
}

pub(crate) fn min_symmetric_eigenvalue(a: &[f64], d: usize) -> f64 {
    if d == 1 {
        return a[0];
    }
    let m = DMatrix::from_row_slice(d, d, a);
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanReversionReport {
    /// Least-squares fit of `(∇V|b)(x) ≈ β̂ − α̂ V(x)`.
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `max (∇V|b) − (β̂ − α̂V)` over the probed points.
    pub worst_violation: f64,
    /// `max |b|²/V`.
    pub c_b_hat: f64,
    pub points: usize,
    pub empirical_only: bool,
}

pub fn check_mean_reversion(
    model: &dyn Diffusion,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> Result<MeanReversionReport> {
    let lyap = model.lyapunov().ok_or(Error::MissingLyapunov)?;
    if sample_count < 2 {
        return Err(Error::invalid("check_mean_reversion needs sample_count >= 2"));
    }
    let region = ProbeRegion::Ball { radius };
    region.validate()?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut vs = Vec::with_capacity(sample_count);
    let mut ys = Vec::with_capacity(sample_count);
    let mut c_b: f64 = 0.0;
    for _ in 0..sample_count {
        region.sample(d, &mut rng, &mut x);
        model.drift(&x, &mut b);
        lyap.gradient(&x, &mut g);
        let v = lyap.value(&x);
        vs.push(v);
        ys.push(g.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>());
        c_b = c_b.max(norm_sq(&b) / v);
    }
    let n = sample_count as f64;
    let mv = vs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = vs.iter().map(|v| (v - mv) * (v - mv)).sum();
    let sxy: f64 = vs.iter().zip(&ys).map(|(v, y)| (v - mv) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let alpha_hat = -slope;
    let beta_hat = my - slope * mv;
    let worst_violation =
        vs.iter().zip(&ys).map(|(v, y)| y - (beta_hat - alpha_hat * v)).fold(f64::NEG_INFINITY, f64::max);
    Ok(MeanReversionReport { alpha_hat, beta_hat, worst_violation, c_b_hat: c_b, points: sample_count, empirical_only: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, HeavyTail, Ou, PowerLyapunov};

    #[test]
    fn ou_dissipativity_is_exact_and_scale_free() {
        let m = Ou::new(1.0, 2.0, 2).unwrap();
        for radius in [1.0, 100.0] {
            let r = check_dissipativity(&m, 500, ProbeRegion::Ball { radius }, 3).unwrap();
            assert!((r.estimate + 1.0).abs() < 1e-12, "{}", r.estimate);
            assert!((r.satisfied_at.unwrap() - 1.0).abs() < 1e-12);
            assert!(r.empirical_only);
        }
    }

    #[test]
    fn heavytail_dissipativity_bound() {
        let m = HeavyTail::new(2, 1.0).unwrap();
        let r = check_dissipativity(&m, 5000, ProbeRegion::Ball { radius: 10.0 }, 5).unwrap();
        assert!(r.estimate <= -1.0 + 1e-12, "{}", r.estimate);
        let outside = check_dissipativity(&m, 2000, ProbeRegion::Annulus { inner: 5.0, outer: 20.0 }, 5).unwrap();
        assert!(outside.estimate <= -1.0 + 1e-12);
    }

    #[test]
    fn expanding_drift_is_flagged() {
        let m = FnModel::scalar(|x| x, |_| 1.0);
        let r = check_dissipativity(&m, 100, ProbeRegion::Ball { radius: 3.0 }, 1).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
        assert_eq!(r.satisfied_at, None);
        assert!(check_dissipativity(&m, 1, ProbeRegion::Ball { radius: 3.0 }, 1).is_err());
    }

    #[test]
    fn ellipticity_examples() {
        let m = Ou::new(1.0, std::f64::consts::SQRT_2, 3).unwrap();
        let r = check_ellipticity(&m, 50, 4.0, 2).unwrap();
        assert!((r.min_eigenvalue - 2.0).abs() < 1e-12);

        let m = HeavyTail::new(2, 1.0).unwrap();
        let r = check_ellipticity(&m, 2000, 3.0, 2).unwrap();
        assert!(r.min_eigenvalue >= 1.0);
        assert!((r.min_eigenvalue - (1.0 + norm_sq(&r.argmin))).abs() < 1e-12);
        assert!(r.min_eigenvalue < 1.01, "{}", r.min_eigenvalue);

        let m = FnModel::new(2, 2, |_, o| o.fill(0.0), |_, o| o.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(check_ellipticity(&m, 10, 1.0, 2).unwrap().min_eigenvalue, 0.0);
    }

    #[test]
    fn mean_reversion_fits() {
        let m = Ou::new(1.0, std::f64::consts::SQRT_2, 1).unwrap();
        let r = check_mean_reversion(&m, 400, 5.0, 9).unwrap();
        assert!((r.alpha_hat - 2.0).abs() < 1e-6 && (r.beta_hat - 2.0).abs() < 1e-6, "{r:?}");
        assert!(r.worst_violation < 1e-9);

        let m = HeavyTail::new(2, 1.0).unwrap();
        let r = check_mean_reversion(&m, 400, 5.0, 9).unwrap();
        assert!(r.alpha_hat > 0.0);
        assert!(r.worst_violation < 1e-9);

        let m = FnModel::scalar(|_| 0.0, |_| 1.0).with_lyapunov(PowerLyapunov::QUADRATIC);
        let r = check_mean_reversion(&m, 100, 5.0, 9).unwrap();
        assert!(r.alpha_hat.abs() < 1e-12 && r.c_b_hat == 0.0);

        let m = FnModel::scalar(|_| 0.0, |_| 1.0);
        assert!(matches!(check_mean_reversion(&m, 100, 5.0, 9), Err(Error::MissingLyapunov)));
    }
}
