//! Closed-form laws of the centered Ornstein–Uhlenbeck process
//! `dX = −αX dt + σ dW` and of its Euler chain started at a Gaussian.
//!
//! With `X̄_0 ~ N(0, v₀)` the chain stays centered Gaussian and its variance
//! follows `σ²_{n+1} = σ²_n (1 − αγ_{n+1})² + σ²γ_{n+1}`, while the
//! invariant law is `ν = N(0, σ²/(2α))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::devroye_lower_bound;
use crate::steps::StepSchedule;

/// `E|Z|` for a standard normal `Z`.
pub const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

#[derive(Clone, Debug)]
pub struct OuOracle {
    alpha: f64,
    sigma: f64,
    schedule: StepSchedule,
    /// `variances[n] = σ_n²` for `n = 0..=horizon`.
    variances: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub n: u64,
    pub gamma: f64,
    pub gamma_sum: f64,
    pub variance: f64,
    pub w1: f64,
    pub tv_lower_bound: f64,
}

impl OuOracle {
    /// Oracle for the chain started at `X̄_0 = 0`.
    pub fn new(alpha: f64, sigma: f64, schedule: StepSchedule) -> Result<Self> {
        Self::with_initial_variance(alpha, sigma, schedule, 0.0)
    }

    /// Oracle for a chain started at `X̄_0 ~ N(0, v0)`.
    pub fn with_initial_variance(alpha: f64, sigma: f64, schedule: StepSchedule, v0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("OU oracle needs alpha > 0 and sigma > 0 (got {alpha}, {sigma})")));
        }
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::invalid(format!("initial variance must be >= 0 (got {v0})")));
        }
        let horizon = schedule.horizon();
        let mut variances = Vec::with_capacity(horizon as usize + 1);
        variances.push(v0);
        let mut v = v0;
        for k in 1..=horizon {
            v = Self::advance(alpha, sigma, v, schedule.gamma(k)?);
            variances.push(v);
        }
        Ok(OuOracle { alpha, sigma, schedule, variances })
    }

    #[inline]
    fn advance(alpha: f64, sigma: f64, v: f64, gamma: f64) -> f64 {
        let c = 1.0 - alpha * gamma;
        v * c * c + sigma * sigma * gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    /// `σ²/(2α)`.
    pub fn invariant_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }

    /// `σ_n²`; memoized up to the schedule horizon and continued past it.
    pub fn variance_recursion(&self, n: u64) -> Result<f64> {
        if let Some(v) = self.variances.get(n as usize) {
            return Ok(*v);
        }
        let mut v = *self.variances.last().expect("v0 is stored");
        for k in self.variances.len() as u64..=n {
            v = Self::advance(self.alpha, self.sigma, v, self.schedule.gamma(k)?);
        }
        Ok(v)
    }

    /// `W₁(N(0, σ_n²), ν) = |σ_n − σ/√(2α)|·E|Z|`.
    pub fn exact_w1_to_invariant(&self, n: u64) -> Result<f64> {
        let v = self.variance_recursion(n)?;
        Ok((v.sqrt() - self.invariant_variance().sqrt()).abs() * MEAN_ABS_NORMAL)
    }

    pub fn tv_lower_bound_curve(&self, n: u64) -> Result<f64> {
        Ok(devroye_lower_bound(self.variance_recursion(n)?, self.invariant_variance()))
    }

    /// Whether `Σ γ_n² < ∞`. The recursion itself holds either way; this
    /// is reported as a status only. `None` for explicit tables.
    pub fn square_summable(&self) -> Option<bool> {
        self.schedule.check_gamma_assumption(1).square_summable
    }

    pub fn row(&self, n: u64) -> Result<OracleRow> {
        Ok(OracleRow {
            n,
            gamma: if n == 0 { 0.0 } else { self.schedule.gamma(n)? },
            gamma_sum: self.schedule.gamma_sum(n)?,
            variance: self.variance_recursion(n)?,
            w1: self.exact_w1_to_invariant(n)?,
            tv_lower_bound: self.tv_lower_bound_curve(n)?,
        })
    }
}

/// `(σ²/(2α))(1 − e^{−2αt})`, the variance of `X_t` started at 0.
pub fn exact_marginal_variance(alpha: f64, sigma: f64, t: f64) -> f64 {
    sigma * sigma / (2.0 * alpha) * -(-2.0 * alpha * t).exp_m1()
}

/// `f(ε) = (1 − e^{−ε})/ε`, with `f(0) = 1`.
fn phi1(eps: f64) -> f64 {
    if eps == 0.0 {
        1.0
    } else {
        -(-eps).exp_m1() / eps
    }
}

/// `f(2ε) − f(ε)²`, evaluated by its power series for small `ε` where the
/// direct form cancels. Leading term `ε²/12`.
fn residual_factor(eps: f64) -> f64 {
    if eps >= 0.5 {
        return phi1(2.0 * eps) - phi1(eps).powi(2);
    }
    const K: usize = 24;
    let mut a = [0.0; K];
    let mut fact = 1.0;
    for (k, ak) in a.iter_mut().enumerate() {
        fact *= (k + 1) as f64;
        *ak = if k % 2 == 0 { 1.0 } else { -1.0 } / fact;
    }
    let mut total = 0.0;
    let mut pow = eps * eps;
    for k in 2..K {
        let b = a[k] * 2f64.powi(k as i32);
        let c: f64 = (0..=k).map(|i| a[i] * a[k - i]).sum();
        total += (b - c) * pow;
        pow *= eps;
    }
    total
}

/// Exact OU transition over a step `h` driven by a given Brownian
/// increment `ΔW`:
/// `X_h = e^{−αh} X_0 + σ ∫_0^h e^{−α(h−s)} dW_s`, where the stochastic
/// integral is split as `m ΔW + s Z` with `Z` independent of `ΔW`.
#[derive(Clone, Copy, Debug)]
pub struct ExactOuStep {
    pub decay: f64,
    /// Regression coefficient of the integral on `ΔW`.
    pub m: f64,
    /// Conditional standard deviation of the integral given `ΔW`.
    pub s: f64,
}

impl ExactOuStep {
    pub fn new(alpha: f64, h: f64) -> Self {
        let eps = alpha * h;
        ExactOuStep { decay: (-eps).exp(), m: phi1(eps), s: (h * residual_factor(eps)).max(0.0).sqrt() }
    }

    #[inline]
    pub fn apply(&self, x: f64, sigma: f64, dw: f64, z: f64) -> f64 {
        self.decay * x + sigma * (self.m * dw + self.s * z)
    }
}
