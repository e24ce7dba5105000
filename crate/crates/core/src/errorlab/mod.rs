//! Measurement of convergence orders: one-step strong and weak errors
//! against coupled references, long-run distance decay along the chain,
//! and log-log rate fits.

mod longrun;
mod onestep;

pub use longrun::{long_run_rate_experiment, LongRunPoint, LongRunResult, LongRunSpec, Target};
pub use onestep::{
    coupled_increments, one_step_strong_error, one_step_weak_error, ErrorEstimate, OneStepSpec, Reference,
    WeakErrorEstimate, RICHARDSON_CAP,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(ln scale, ln error)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::invalid(format!("rate fit needs at least 3 pairs (got {})", pairs.len())));
    }
    if let Some(p) = pairs.iter().find(|(s, e)| !(*s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())) {
        return Err(Error::invalid(format!("rate fit needs positive finite pairs (got {p:?})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct scales"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(RateFit { pairs: pairs.to_vec(), slope, intercept: my - slope * mx, r2 })
}
