//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use langstep::steps::StepSchedule;

/// `∫|φ_{0,1} − φ_{0,2}|` from a 10⁶-interval trapezoid rule on [−40, 40].
pub const TV_GAUSSIAN_1_2_TRAPEZOID: f64 = 0.645_349_137_836_533_2;

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
pub struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `Σ_{k≤n} γ_k² exp(−ρ Σ_{k<j≤n} γ_j)` summed from the definition, with
/// the exponent accumulated from the steps rather than from cached `Γ`.
pub fn direct_decay_sum(s: &StepSchedule, n: u64, rho: f64) -> f64 {
    let mut tail = Compensated::default();
    let mut total = Compensated::default();
    for k in (1..=n).rev() {
        let g = s.gamma(k).unwrap();
        total.add(g * g * (-rho * tail.value()).exp());
        tail.add(g);
    }
    total.value()
}

pub fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (f64::EPSILON * a.abs().max(b.abs()))
}

/// Two-phase dense simplex with Bland's rule for
/// `min cᵀx` subject to `Ax = b`, `x ≥ 0`, `b ≥ 0`.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    const EPS: f64 = 1e-13;
    let m = a.len();
    let nv = c.len();
    let width = nv + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..nv].copy_from_slice(&a[i]);
            row[nv + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, r: usize, col: usize| {
        let p = t[r][col];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                for (v, q) in row.iter_mut().zip(&pr) {
                    *v -= f * q;
                }
            }
        }
        let f = obj[col];
        for (v, q) in obj.iter_mut().zip(&pr) {
            *v -= f * q;
        }
    };

    let run = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, basis: &mut Vec<usize>, allowed: usize| loop {
        let Some(col) = (0..allowed).find(|&j| obj[j] < -EPS) else { return };
        let mut best: Option<(f64, usize)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col] > EPS {
                let ratio = row[width - 1] / row[col];
                let better = match best {
                    None => true,
                    Some((r0, i0)) => ratio < r0 - 1e-15 || (ratio <= r0 + 1e-15 && basis[i] < basis[i0]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let (_, r) = best.expect("transport LP is bounded");
        pivot(t, obj, r, col);
        basis[r] = col;
    };

    let mut obj = vec![0.0; width];
    for row in &t {
        for j in 0..nv {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    run(&mut t, &mut obj, &mut basis, nv);
    for r in 0..m {
        if basis[r] >= nv {
            if let Some(col) = (0..nv).find(|&j| t[r][j].abs() > 1e-9) {
                let mut dummy = vec![0.0; width];
                pivot(&mut t, &mut dummy, r, col);
                basis[r] = col;
            }
        }
    }
    let mut obj = vec![0.0; width];
    obj[..nv].copy_from_slice(c);
    for r in 0..m {
        let cb = if basis[r] < nv { c[basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                obj[j] -= cb * t[r][j];
            }
        }
    }
    run(&mut t, &mut obj, &mut basis, nv);
    -obj[width - 1]
}

/// W₁ between two weighted atom sets as an optimal transport LP.
pub fn w1_lp(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let ta: f64 = a.iter().map(|p| p.1).sum();
    let tb: f64 = b.iter().map(|p| p.1).sum();
    let (m, n) = (a.len(), b.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        let mut r = vec![0.0; m * n];
        for j in 0..n {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(a[i].1 / ta);
    }
    // the last column constraint is implied by the others
    for j in 0..n - 1 {
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(b[j].1 / tb);
    }
    let cost: Vec<f64> = (0..m * n).map(|k| (a[k / n].0 - b[k % n].0).abs()).collect();
    simplex_min(&rows, &rhs, &cost)
}

/// `∫|φ_{0,s₁} − φ_{0,s₂}|` by the composite trapezoid rule.
pub fn tv_gaussian_trapezoid(s1: f64, s2: f64, half_width: f64, intervals: usize) -> f64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |x: f64| (norm / s1 * (-0.5 * (x / s1).powi(2)).exp() - norm / s2 * (-0.5 * (x / s2).powi(2)).exp()).abs();
    let h = 2.0 * half_width / intervals as f64;
    let mut acc = Compensated::default();
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
        acc.add(w * f(-half_width + i as f64 * h));
    }
    acc.value() * h
}

/// Sample variance with the `n − 1` divisor.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// 99.7% two-sided interval for the sample variance of `n` Gaussian draws
/// with true variance `v`.
pub fn chi2_variance_interval(v: f64, n: usize) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let k = (n - 1) as f64;
    let chi = ChiSquared::new(k).unwrap();
    let tail = (1.0 - 0.997) / 2.0;
    (v * chi.inverse_cdf(tail) / k, v * chi.inverse_cdf(1.0 - tail) / k)
}
