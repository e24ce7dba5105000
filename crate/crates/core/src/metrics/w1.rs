//! One-dimensional Wasserstein-1 through `W₁ = ∫ |F_A − F_B| dx`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{quad, DistanceReport, Estimator, Law1d, WeightedSamples};
use crate::error::{Error, Result};

/// One side of a 1D comparison.
#[derive(Clone, Copy)]
pub enum Side<'a> {
    Samples(&'a WeightedSamples),
    Law(&'a dyn Law1d),
}

impl Side<'_> {
    fn check(&self) -> Result<()> {
        match self {
            Side::Samples(s) if s.dim() != 1 => {
                Err(Error::DimensionMismatch { expected: 1, got: s.dim(), context: "one-dimensional distance" })
            }
            _ => Ok(()),
        }
    }

    fn size(&self) -> serde_json::Value {
        match self {
            Side::Samples(s) => s.len().into(),
            Side::Law(_) => "analytic".into(),
        }
    }
}

/// `L(c) = ∫_{−∞}^c F = E(c − Y)⁺` for a sample or a law, plus the mean.
pub enum CdfIntegral<'a> {
    Samples { xs: Vec<f64>, cum_w: Vec<f64>, cum_wx: Vec<f64> },
    Law(&'a dyn Law1d),
}

impl<'a> CdfIntegral<'a> {
    pub fn new(side: Side<'a>) -> Self {
        match side {
            Side::Law(l) => CdfIntegral::Law(l),
            Side::Samples(s) => {
                let atoms = s.sorted_atoms();
                let mut xs = Vec::with_capacity(atoms.len());
                let mut cum_w = Vec::with_capacity(atoms.len() + 1);
                let mut cum_wx = Vec::with_capacity(atoms.len() + 1);
                let (mut w, mut wx) = (0.0, 0.0);
                cum_w.push(0.0);
                cum_wx.push(0.0);
                for (x, p) in atoms {
                    xs.push(x);
                    w += p;
                    wx += p * x;
                    cum_w.push(w);
                    cum_wx.push(wx);
                }
                CdfIntegral::Samples { xs, cum_w, cum_wx }
            }
        }
    }

    pub fn at(&self, c: f64) -> f64 {
        match self {
            CdfIntegral::Law(l) => l.lower_partial_mean(c),
            CdfIntegral::Samples { xs, cum_w, cum_wx } => {
                let k = xs.partition_point(|&x| x < c);
                c * cum_w[k] - cum_wx[k]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CdfIntegral::Law(l) => l.mean(),
            CdfIntegral::Samples { cum_wx, .. } => *cum_wx.last().unwrap(),
        }
    }

    /// `E(Y − c)⁺ = ∫_c^∞ (1 − F)`.
    pub fn upper(&self, c: f64) -> f64 {
        self.at(c) - c + self.mean()
    }
}

fn sweep_samples(a: &WeightedSamples, b: &WeightedSamples) -> f64 {
    let (xa, xb) = (a.sorted_atoms(), b.sorted_atoms());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += (fa - fb).abs() * (x - p);
        }
        while i < xa.len() && xa[i].0 == x {
            fa += xa[i].1;
            i += 1;
        }
        while j < xb.len() && xb[j].0 == x {
            fb += xb[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    total
}

fn samples_vs_law(a: &WeightedSamples, law: &dyn Law1d) -> f64 {
    let l = CdfIntegral::Law(law);
    let atoms = a.sorted_atoms();
    let first = atoms[0].0;
    let last = atoms[atoms.len() - 1].0;
    let mut total = l.at(first) + l.upper(last);
    let mut level = 0.0;
    for w in atoms.windows(2) {
        level += w[0].1;
        let (lo, hi) = (w[0].0, w[1].0);
        if hi == lo {
            continue;
        }
        let c = level.min(1.0);
        let mass = l.at(hi) - l.at(lo);
        total += if law.cdf(hi) <= c {
            c * (hi - lo) - mass
        } else if law.cdf(lo) >= c {
            mass - c * (hi - lo)
        } else {
            let xs = law.quantile(c).clamp(lo, hi);
            let (left, right) = (l.at(xs) - l.at(lo), l.at(hi) - l.at(xs));
            c * (xs - lo) - left + right - c * (hi - xs)
        };
    }
    total.max(0.0)
}

fn law_vs_law(a: &dyn Law1d, b: &dyn Law1d) -> f64 {
    let f = |x: f64| (a.cdf(x) - b.cdf(x)).abs();
    let m = 0.5 * (a.mean() + b.mean());
    quad::integrate_lower(&f, m, 1e-11) + quad::integrate_upper(&f, m, 1e-11)
}

/// Exact W₁ between step CDFs (merged-breakpoint sweep), or by partial
/// means and quadrature when a side is analytic.
pub fn w1_exact_1d(a: Side, b: Side) -> Result<DistanceReport> {
    a.check()?;
    b.check()?;
    let value = match (a, b) {
        (Side::Samples(x), Side::Samples(y)) => sweep_samples(x, y),
        (Side::Samples(x), Side::Law(l)) | (Side::Law(l), Side::Samples(x)) => samples_vs_law(x, l),
        (Side::Law(l), Side::Law(m)) => law_vs_law(l, m),
    };
    Ok(DistanceReport::new(Estimator::W1Exact1d, value).with("n_a", a.size()).with("n_b", b.size()))
}

/// Average of exact 1D W₁ over `n_projections` seeded uniform directions.
/// This is the sliced distance, not an estimate of W₁ in `d ≥ 2`.
pub fn w1_sliced(a: &WeightedSamples, b: &WeightedSamples, n_projections: usize, seed: u64) -> Result<DistanceReport> {
    let d = a.dim();
    if d < 2 {
        return Err(Error::invalid("sliced W1 needs d >= 2"));
    }
    if b.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.dim(), context: "sliced W1" });
    }
    if n_projections == 0 {
        return Err(Error::invalid("n_projections must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut theta = vec![0.0; d];
    for _ in 0..n_projections {
        loop {
            for t in theta.iter_mut() {
                *t = StandardNormal.sample(&mut rng);
            }
            let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm > 1e-12 {
                theta.iter_mut().for_each(|t| *t /= norm);
                break;
            }
        }
        total += sweep_samples(&a.project(&theta), &b.project(&theta));
    }
    Ok(DistanceReport::new(Estimator::W1Sliced, total / n_projections as f64)
        .with("projections", n_projections)
        .with("n_a", a.len())
        .with("n_b", b.len()))
}

/// Binned lower bound on W₁:
/// `Σ_j |∫_{bin j} (F_A − F_B)| + |∫_{−∞}^{e_0}(F_A − F_B)| + |∫_{e_K}^∞(F_A − F_B)|`.
///
/// Equal to W₁ when `F_A − F_B` keeps its sign on every bin. Sample noise
/// averages out inside each bin, which makes it far less noisy than the
/// exact estimator when the two laws are close.
pub fn w1_binned_1d(a: Side, b: Side, edges: &[f64]) -> Result<DistanceReport> {
    a.check()?;
    b.check()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("bin edges must be strictly increasing, at least two"));
    }
    let (la, lb) = (CdfIntegral::new(a), CdfIntegral::new(b));
    let ga: Vec<f64> = edges.iter().map(|&e| la.at(e)).collect();
    let gb: Vec<f64> = edges.iter().map(|&e| lb.at(e)).collect();
    let k = edges.len() - 1;
    let mut value = (ga[0] - gb[0]).abs() + (la.upper(edges[k]) - lb.upper(edges[k])).abs();
    for j in 0..k {
        value += ((ga[j + 1] - ga[j]) - (gb[j + 1] - gb[j])).abs();
    }
    Ok(DistanceReport::new(Estimator::W1Binned1d, value)
        .with("bins", k)
        .with("n_a", a.size())
        .with("n_b", b.size()))
}

/// `2·bins_per_side + 1` edges spanning `[−half_width, half_width]`, with
/// an edge at 0.
pub fn symmetric_edges(half_width: f64, bins_per_side: usize) -> Vec<f64> {
    let n = bins_per_side as i64;
    (-n..=n).map(|i| half_width * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Gaussian1d;

    fn s(v: &[f64]) -> WeightedSamples {
        WeightedSamples::from_1d(v).unwrap()
    }

    #[test]
    fn point_masses() {
        let (a, b) = (s(&[0.0]), s(&[1.0]));
        assert_eq!(w1_exact_1d(Side::Samples(&a), Side::Samples(&b)).unwrap().value, 1.0);
        let a = s(&[0.3, -1.0, 2.0]);
        assert_eq!(w1_exact_1d(Side::Samples(&a), Side::Samples(&a)).unwrap().value, 0.0);
    }

    #[test]
    fn gaussians_in_closed_form() {
        let (g1, g2) = (Gaussian1d::new(0.0, 1.0).unwrap(), Gaussian1d::new(0.0, 2.0).unwrap());
        let v = w1_exact_1d(Side::Law(&g1), Side::Law(&g2)).unwrap().value;
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn dirac_against_law_is_mean_absolute_deviation() {
        let g = Gaussian1d::new(0.0, 1.0).unwrap();
        let v = w1_exact_1d(Side::Samples(&s(&[0.0])), Side::Law(&g)).unwrap().value;
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let v = w1_exact_1d(Side::Law(&g), Side::Samples(&s(&[1.5]))).unwrap().value;
        let expect = 1.5 * (2.0 * g.cdf(1.5) - 1.0) + 2.0 * g.density(1.5);
        assert!((v - expect).abs() < 1e-10);
    }

    #[test]
    fn binned_equals_exact_for_ordered_laws() {
        // F_A ≥ F_B everywhere when A is B shifted left
        let a = s(&[-0.5, 0.1, 0.7, 1.3]);
        let b = s(&[-0.2, 0.4, 1.0, 1.6]);
        let exact = w1_exact_1d(Side::Samples(&a), Side::Samples(&b)).unwrap().value;
        let binned = w1_binned_1d(Side::Samples(&a), Side::Samples(&b), &symmetric_edges(1.0, 3)).unwrap().value;
        assert!((exact - 0.3).abs() < 1e-15 && (binned - exact).abs() < 1e-14);
    }

    #[test]
    fn binned_is_a_lower_bound() {
        let a = s(&[-1.0, 1.0]);
        let b = s(&[0.0, 0.0]);
        let exact = w1_exact_1d(Side::Samples(&a), Side::Samples(&b)).unwrap().value;
        let coarse = w1_binned_1d(Side::Samples(&a), Side::Samples(&b), &[-2.0, 2.0]).unwrap().value;
        let fine = w1_binned_1d(Side::Samples(&a), Side::Samples(&b), &symmetric_edges(2.0, 4)).unwrap().value;
        assert_eq!(exact, 1.0);
        assert!(coarse.abs() < 1e-15);
        assert!((fine - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sliced_diracs() {
        let a = WeightedSamples::uniform(2, vec![0.0, 0.0]).unwrap();
        let b = WeightedSamples::uniform(2, vec![1.0, 0.0]).unwrap();
        assert_eq!(w1_sliced(&a, &a, 50, 1).unwrap().value, 0.0);
        let v = w1_sliced(&a, &b, 10_000, 3).unwrap().value;
        // E|cos θ| = 2/π, sd of |cos θ| ≈ 0.31
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 4.0 * 0.31 / 100.0, "{v}");
        assert!(w1_sliced(&s(&[1.0]), &s(&[2.0]), 5, 0).is_err());
    }
}
