//! Step sequences `(γ_n)` for the decreasing-step Euler scheme.
//!
//! A schedule is either polynomial, `γ_n = γ₁ / n^a`, or an explicit
//! non-increasing table. Partial sums `Γ_n = γ_1 + … + γ_n` (with `Γ_0 = 0`)
//! are cached eagerly up to a declared horizon, so `gamma_sum` is O(1) and
//! `n_of_t` is a binary search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialized form of a schedule, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepSpec {
    Polynomial { gamma1: f64, a: f64 },
    Explicit { values: Vec<f64> },
}

impl StepSpec {
    /// Parses the short CLI form `poly:γ₁:a` or `explicit:v1,v2,…`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("schedule '{s}': expected 'poly:g1:a' or 'explicit:v1,v2,...'")))?;
        match head {
            "poly" | "polynomial" => {
                let (g, a) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("schedule '{s}': expected 'poly:g1:a'")))?;
                let gamma1 = parse_f64(g, "gamma1")?;
                let a = parse_f64(a, "a")?;
                Ok(StepSpec::Polynomial { gamma1, a })
            }
            "explicit" => {
                let values = rest
                    .split(',')
                    .map(|v| parse_f64(v, "explicit step"))
                    .collect::<Result<Vec<_>>>()?;
                Ok(StepSpec::Explicit { values })
            }
            other => Err(Error::invalid(format!("unknown schedule kind '{other}'"))),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("{what}: '{s}' is not a number")))
}

/// Value of the index `ϖ = limsup (γ_n − γ_{n+1}) / γ_{n+1}²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Varpi {
    pub value: f64,
    /// `true` when `value` is a tail-maximum over a finite table rather
    /// than the closed-form limsup.
    pub estimate: bool,
}

/// Status of the step-sequence assumption over an inspected horizon.
///
/// `None` means the property cannot be decided from the data (explicit
/// tables say nothing about limits).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaReport {
    pub horizon: u64,
    pub non_increasing: Option<bool>,
    pub vanishing: Option<bool>,
    pub divergent: Option<bool>,
    /// `Σ γ_n² < ∞`, reported alongside because the OU discussion uses it.
    pub square_summable: Option<bool>,
    pub notes: Vec<String>,
}

impl GammaReport {
    pub fn holds(&self) -> bool {
        self.non_increasing == Some(true) && self.vanishing == Some(true) && self.divergent == Some(true)
    }
}

#[derive(Clone, Debug)]
pub struct StepSchedule {
    spec: StepSpec,
    /// `steps[k − 1] = γ_k` for `k = 1..=horizon`.
    steps: Vec<f64>,
    /// `sums[k] = Γ_k` for `k = 0..=horizon`.
    sums: Vec<f64>,
}

impl StepSchedule {
    pub fn polynomial(gamma1: f64, a: f64, horizon: u64) -> Result<Self> {
        Self::new(StepSpec::Polynomial { gamma1, a }, horizon)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let horizon = values.len() as u64;
        Self::new(StepSpec::Explicit { values }, horizon)
    }

    /// Builds a schedule and its `Γ` cache up to `horizon` steps. For
    /// explicit tables the horizon is the table length.
    pub fn new(spec: StepSpec, horizon: u64) -> Result<Self> {
        match &spec {
            StepSpec::Polynomial { gamma1, a } => {
                if !(gamma1.is_finite() && *gamma1 > 0.0) {
                    return Err(Error::InvalidSchedule(format!("gamma1 must be > 0 (got {gamma1})")));
                }
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(Error::InvalidSchedule(format!("a must be >= 0 (got {a})")));
                }
            }
            StepSpec::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidSchedule("explicit table is empty".into()));
                }
                for (i, v) in values.iter().enumerate() {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(Error::InvalidSchedule(format!("step {} must be > 0 (got {v})", i + 1)));
                    }
                    if i > 0 && *v > values[i - 1] {
                        return Err(Error::InvalidSchedule(format!(
                            "steps must be non-increasing: step {} = {v} > step {} = {}",
                            i + 1,
                            i,
                            values[i - 1]
                        )));
                    }
                }
            }
        }
        let horizon = match &spec {
            StepSpec::Explicit { values } => values.len() as u64,
            StepSpec::Polynomial { .. } => horizon,
        };
        let steps: Vec<f64> = match &spec {
            StepSpec::Explicit { values } => values.clone(),
            StepSpec::Polynomial { gamma1, a } => (1..=horizon).map(|n| poly_step(*gamma1, *a, n)).collect(),
        };
        let mut sums = Vec::with_capacity(steps.len() + 1);
        sums.push(0.0);
        let mut acc = 0.0;
        for g in &steps {
            // plain left-to-right accumulation: Γ_n = fl(Γ_{n-1} + γ_n) exactly
            acc += g;
            sums.push(acc);
        }
        Ok(StepSchedule { spec, steps, sums })
    }

    pub fn spec(&self) -> &StepSpec {
        &self.spec
    }

    /// Number of steps whose partial sums are cached.
    pub fn horizon(&self) -> u64 {
        (self.sums.len() - 1) as u64
    }

    #[inline]
    fn step_unchecked(&self, n: u64) -> f64 {
        if let Some(g) = self.steps.get((n - 1) as usize) {
            return *g;
        }
        match &self.spec {
            StepSpec::Polynomial { gamma1, a } => poly_step(*gamma1, *a, n),
            StepSpec::Explicit { values } => values[(n - 1) as usize],
        }
    }

    /// `γ_n`, for `n ≥ 1`.
    #[inline]
    pub fn gamma(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::ZeroStepIndex);
        }
        if let StepSpec::Explicit { values } = &self.spec {
            if n as usize > values.len() {
                return Err(Error::BeyondTable { n, len: values.len() });
            }
        }
        Ok(self.step_unchecked(n))
    }

    /// `Γ_n`, with `Γ_0 = 0`. Polynomial schedules extend past the cached
    /// horizon on demand (linear cost in the overshoot).
    pub fn gamma_sum(&self, n: u64) -> Result<f64> {
        if let Some(s) = self.sums.get(n as usize) {
            return Ok(*s);
        }
        match &self.spec {
            StepSpec::Explicit { values } => Err(Error::BeyondTable { n, len: values.len() }),
            StepSpec::Polynomial { .. } => {
                let mut acc = *self.sums.last().expect("Γ_0 always cached");
                for k in self.horizon() + 1..=n {
                    acc += self.step_unchecked(k);
                }
                Ok(acc)
            }
        }
    }

    /// `N(t) = max{k ≥ 0 : Γ_k ≤ t}`. Explicit tables saturate at their
    /// length.
    pub fn n_of_t(&self, t: f64) -> u64 {
        if !(t >= 0.0) {
            return 0;
        }
        let last = *self.sums.last().expect("Γ_0 always cached");
        if t < last {
            // sums[0] = 0 <= t, so partition_point >= 1
            return (self.sums.partition_point(|&s| s <= t) - 1) as u64;
        }
        match &self.spec {
            StepSpec::Explicit { .. } => self.horizon(),
            StepSpec::Polynomial { .. } => {
                let mut k = self.horizon();
                let mut acc = last;
                loop {
                    let next = acc + self.step_unchecked(k + 1);
                    if next > t {
                        return k;
                    }
                    acc = next;
                    k += 1;
                }
            }
        }
    }

    /// The index `ϖ`. Closed form for polynomial schedules; for explicit
    /// tables, the maximum ratio over the second half of the table.
    pub fn varpi(&self) -> Varpi {
        match &self.spec {
            StepSpec::Polynomial { gamma1, a } => {
                let value = if *a == 0.0 || *a < 1.0 {
                    0.0
                } else if *a == 1.0 {
                    1.0 / gamma1
                } else {
                    f64::INFINITY
                };
                Varpi { value, estimate: false }
            }
            StepSpec::Explicit { values } => {
                let start = values.len() / 2;
                let value = values[start..]
                    .windows(2)
                    .map(|w| (w[0] - w[1]) / (w[1] * w[1]))
                    .fold(0.0, f64::max);
                Varpi { value, estimate: true }
            }
        }
    }

    pub fn check_gamma_assumption(&self, horizon: u64) -> GammaReport {
        let horizon = match &self.spec {
            StepSpec::Explicit { values } => horizon.min(values.len() as u64),
            StepSpec::Polynomial { .. } => horizon,
        }
        .max(1);
        let mut non_increasing = true;
        let mut prev = self.step_unchecked(1);
        for n in 2..=horizon {
            let g = self.step_unchecked(n);
            if g > prev {
                non_increasing = false;
                break;
            }
            prev = g;
        }
        let mut notes = Vec::new();
        let (vanishing, divergent, square_summable) = match &self.spec {
            StepSpec::Polynomial { a, .. } => {
                if *a == 0.0 {
                    notes.push("constant step: γ_n does not vanish".to_string());
                }
                if *a > 1.0 {
                    notes.push("a > 1: Σγ_n converges, Γ_n is bounded".to_string());
                }
                (Some(*a > 0.0), Some(*a <= 1.0), Some(*a > 0.5))
            }
            StepSpec::Explicit { .. } => {
                notes.push("explicit table: limit properties cannot be decided from finitely many steps".to_string());
                (None, None, None)
            }
        };
        GammaReport { horizon, non_increasing: Some(non_increasing), vanishing, divergent, square_summable, notes }
    }

    /// `u_n = Σ_{k≤n} γ_k² e^{−ρ(Γ_n − Γ_k)}`, by the recursion
    /// `u_{k+1} = u_k e^{−ργ_{k+1}} + γ_{k+1}²`.
    pub fn decay_sum(&self, n: u64, rho: f64) -> Result<f64> {
        Ok(*self.decay_sums(n, rho)?.last().expect("n >= 1"))
    }

    /// `[u_1, …, u_n]`.
    pub fn decay_sums(&self, n: u64, rho: f64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::ZeroStepIndex);
        }
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("rho must be > 0 (got {rho})")));
        }
        // u is carried as an unevaluated sum hi + lo, and the decay factor
        // as 1 + expm1(−ργ), so rounding does not accumulate along the run.
        let mut out = Vec::with_capacity(n as usize);
        let (mut hi, mut lo) = (0.0f64, 0.0f64);
        for k in 1..=n {
            let g = self.gamma(k)?;
            let m = (-rho * g).exp_m1();
            let p = hi * m;
            let p_lo = hi.mul_add(m, -p) + lo * m;
            let (s, e1) = two_sum(hi, p);
            let q = g * g;
            let q_lo = g.mul_add(g, -q);
            let (t, e2) = two_sum(s, q);
            let rest = lo + p_lo + q_lo + e1 + e2;
            hi = t + rest;
            lo = rest - (hi - t);
            out.push(hi);
        }
        Ok(out)
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn poly_step(gamma1: f64, a: f64, n: u64) -> f64 {
    let nf = n as f64;
    if a == 0.0 {
        gamma1
    } else if a == 1.0 {
        gamma1 / nf
    } else if a == 0.5 {
        gamma1 / nf.sqrt()
    } else {
        gamma1 / nf.powf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        let s = StepSchedule::polynomial(1.0, 1.0, 10).unwrap();
        assert_eq!(s.gamma(2).unwrap(), 0.5);
        let s = StepSchedule::polynomial(1.0, 0.5, 10).unwrap();
        assert_eq!(s.gamma(4).unwrap(), 0.5);
        let s = StepSchedule::explicit(vec![0.3, 0.2, 0.1]).unwrap();
        assert_eq!(s.gamma(3).unwrap(), 0.1);
        assert!(matches!(s.gamma(0), Err(Error::ZeroStepIndex)));
        assert!(matches!(s.gamma(4), Err(Error::BeyondTable { .. })));
    }

    #[test]
    fn gamma_sum_examples() {
        let s = StepSchedule::polynomial(1.0, 1.0, 10).unwrap();
        assert_eq!(s.gamma_sum(0).unwrap(), 0.0);
        assert!((s.gamma_sum(3).unwrap() - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
        let e = StepSchedule::explicit(vec![0.3, 0.2, 0.1]).unwrap();
        assert_eq!(e.gamma_sum(2).unwrap(), 0.3 + 0.2);
    }

    #[test]
    fn gamma_sum_extends_past_horizon() {
        let short = StepSchedule::polynomial(0.5, 0.7, 10).unwrap();
        let long = StepSchedule::polynomial(0.5, 0.7, 1000).unwrap();
        assert_eq!(short.gamma_sum(1000).unwrap(), long.gamma_sum(1000).unwrap());
        assert_eq!(short.n_of_t(long.gamma_sum(500).unwrap()), 500);
    }

    #[test]
    fn n_of_t_examples() {
        let s = StepSchedule::polynomial(1.0, 1.0, 10).unwrap();
        assert_eq!(s.n_of_t(1.6), 2);
        assert_eq!(s.n_of_t(0.0), 0);
        let e = StepSchedule::explicit(vec![0.3, 0.2, 0.1]).unwrap();
        // Γ_2 = fl(0.3 + 0.2) = 0.5 exactly
        assert_eq!(e.n_of_t(0.5), 2);
        assert_eq!(e.n_of_t(0.0), 0);
        assert_eq!(e.n_of_t(100.0), 3);
    }

    #[test]
    fn varpi_closed_forms() {
        let v = |g, a| StepSchedule::polynomial(g, a, 1).unwrap().varpi();
        assert_eq!(v(1.0, 0.5).value, 0.0);
        assert_eq!(v(2.0, 1.0).value, 0.5);
        assert_eq!(v(1.0, 1.5).value, f64::INFINITY);
        assert_eq!(v(1.0, 0.0).value, 0.0);
        assert!(!v(1.0, 0.5).estimate);
    }

    #[test]
    fn varpi_table_estimate_tracks_closed_form() {
        // 1/n with γ₁ = 2: ratio (γ_n−γ_{n+1})/γ_{n+1}² = (n+1)/(2n) → 1/2 from above
        let table: Vec<f64> = (1..=2000).map(|n| 2.0 / n as f64).collect();
        let v = StepSchedule::explicit(table).unwrap().varpi();
        assert!(v.estimate);
        assert!(v.value > 0.5 && v.value < 0.501, "{}", v.value);
    }

    #[test]
    fn gamma_assumption_reports() {
        let r = StepSchedule::polynomial(1.0, 0.5, 10).unwrap().check_gamma_assumption(100);
        assert_eq!((r.non_increasing, r.vanishing, r.divergent), (Some(true), Some(true), Some(true)));
        assert!(r.holds());
        let r = StepSchedule::polynomial(1.0, 1.5, 10).unwrap().check_gamma_assumption(100);
        assert_eq!((r.non_increasing, r.vanishing, r.divergent), (Some(true), Some(true), Some(false)));
        let r = StepSchedule::polynomial(1.0, 0.0, 10).unwrap().check_gamma_assumption(100);
        assert_eq!((r.non_increasing, r.vanishing, r.divergent), (Some(true), Some(false), Some(true)));
        assert!(!r.holds());
        let r = StepSchedule::explicit(vec![0.3, 0.2, 0.1]).unwrap().check_gamma_assumption(100);
        assert_eq!(r.non_increasing, Some(true));
        assert_eq!(r.vanishing, None);
        assert_eq!(r.horizon, 3);
    }

    #[test]
    fn explicit_tables_are_validated() {
        assert!(StepSchedule::explicit(vec![0.1, 0.2]).is_err());
        assert!(StepSchedule::explicit(vec![0.1, 0.0]).is_err());
        assert!(StepSchedule::explicit(vec![]).is_err());
        assert!(StepSchedule::polynomial(-1.0, 0.5, 3).is_err());
        assert!(StepSchedule::polynomial(1.0, -0.5, 3).is_err());
    }

    #[test]
    fn decay_sum_examples() {
        let e = StepSchedule::explicit(vec![1.0, 0.5]).unwrap();
        assert_eq!(e.decay_sum(1, 1.0).unwrap(), 1.0);
        let direct = 1.0 * (-0.5f64).exp() + 0.25;
        assert!((e.decay_sum(2, 1.0).unwrap() - direct).abs() < 1e-15);
        assert!((e.decay_sum(2, 1.0).unwrap() - 0.856531).abs() < 1e-6);
        assert!(e.decay_sum(0, 1.0).is_err());
        assert!(e.decay_sum(1, 0.0).is_err());
    }

    #[test]
    fn short_spec_parsing() {
        assert_eq!(
            StepSpec::parse_short("poly:0.5:0.9").unwrap(),
            StepSpec::Polynomial { gamma1: 0.5, a: 0.9 }
        );
        assert_eq!(
            StepSpec::parse_short("explicit:0.3,0.2").unwrap(),
            StepSpec::Explicit { values: vec![0.3, 0.2] }
        );
        assert!(StepSpec::parse_short("poly:x:1").is_err());
        assert!(StepSpec::parse_short("geometric:1").is_err());
    }

    #[test]
    fn spec_json_shape() {
        let s: StepSpec = serde_json::from_str(r#"{"kind":"polynomial","gamma1":0.5,"a":0.9}"#).unwrap();
        assert_eq!(s, StepSpec::Polynomial { gamma1: 0.5, a: 0.9 });
        let s: StepSpec = serde_json::from_str(r#"{"kind":"explicit","values":[0.3,0.2]}"#).unwrap();
        assert_eq!(s, StepSpec::Explicit { values: vec![0.3, 0.2] });
    }
}
