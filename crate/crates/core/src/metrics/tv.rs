use serde_json::json;

use super::{quad, DistanceReport, Estimator, Law1d, WeightedSamples};
use crate::error::{Error, Result};

const MAX_CELLS: usize = 10_000_000;

/// Product grid with `bins` equal cells per axis plus an underflow and an
/// overflow cell on each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramGrid {
    pub edges: Vec<Vec<f64>>,
}

impl HistogramGrid {
    pub fn uniform(ranges: &[(f64, f64)], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins (got {bins})")));
        }
        let cells = (bins + 2).checked_pow(ranges.len() as u32).unwrap_or(usize::MAX);
        if cells > MAX_CELLS {
            return Err(Error::invalid(format!("histogram grid too large ({bins} bins in d = {})", ranges.len())));
        }
        let mut edges = Vec::with_capacity(ranges.len());
        for &(lo, hi) in ranges {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("histogram range must satisfy lo < hi (got [{lo}, {hi}])")));
            }
            edges.push((0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect());
        }
        Ok(HistogramGrid { edges })
    }

    pub fn bins(&self) -> usize {
        self.edges[0].len() - 1
    }

    fn cells_per_axis(&self) -> usize {
        self.bins() + 2
    }

    fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(self.edges.len() as u32)
    }

    /// Cell index along one axis: 0 is underflow, `bins + 1` overflow.
    fn axis_cell(edges: &[f64], v: f64) -> usize {
        edges.partition_point(|&e| e <= v)
    }

    fn cell(&self, p: &[f64]) -> usize {
        let m = self.cells_per_axis();
        p.iter().zip(&self.edges).fold(0, |acc, (&v, e)| acc * m + Self::axis_cell(e, v))
    }

    pub fn probabilities(&self, s: &WeightedSamples) -> Vec<f64> {
        let mut p = vec![0.0; self.cell_count()];
        let total = s.total_weight();
        for (x, w) in s.points().chunks_exact(s.dim()).zip(s.weights()) {
            p[self.cell(x)] += w / total;
        }
        p
    }

    fn law_probabilities(&self, law: &dyn Law1d) -> Vec<f64> {
        let e = &self.edges[0];
        let cdf: Vec<f64> = e.iter().map(|&x| law.cdf(x)).collect();
        let mut p = Vec::with_capacity(e.len() + 1);
        p.push(cdf[0]);
        p.extend(cdf.windows(2).map(|w| w[1] - w[0]));
        p.push(1.0 - cdf[cdf.len() - 1]);
        p
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        self.edges.iter().map(|e| (e[0], e[e.len() - 1])).collect()
    }
}

/// `⌈n^{1/3}⌉` without floating-point edge effects.
fn default_bins(n: usize) -> usize {
    let mut k = (n as f64).cbrt().round() as usize;
    while k.pow(3) < n {
        k += 1;
    }
    while k > 1 && (k - 1).pow(3) >= n {
        k -= 1;
    }
    k.max(2)
}

fn weighted_quantiles(mut atoms: Vec<(f64, f64)>, qs: &[f64]) -> Vec<f64> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut out = Vec::with_capacity(qs.len());
    for &q in qs {
        let mut acc = 0.0;
        let mut v = atoms[atoms.len() - 1].0;
        for &(x, w) in &atoms {
            acc += w / total;
            if acc >= q {
                v = x;
                break;
            }
        }
        out.push(v);
    }
    out
}

fn extend(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.1 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Pooled `[q_{0.001}, q_{0.999}]` per axis, widened by 10% on each side.
fn default_ranges(a: &WeightedSamples, b: &WeightedSamples) -> Vec<(f64, f64)> {
    let (ta, tb) = (a.total_weight(), b.total_weight());
    (0..a.dim())
        .map(|i| {
            let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
            atoms.extend(a.points().chunks_exact(a.dim()).zip(a.weights()).map(|(p, w)| (p[i], w / ta)));
            atoms.extend(b.points().chunks_exact(b.dim()).zip(b.weights()).map(|(p, w)| (p[i], w / tb)));
            let q = weighted_quantiles(atoms, &[0.001, 0.999]);
            extend(q[0], q[1])
        })
        .collect()
}

fn finish(p: &[f64], q: &[f64], grid: &HistogramGrid, n_a: usize, n_b: serde_json::Value) -> DistanceReport {
    let value: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    DistanceReport::new(Estimator::TvHistogram, value.min(2.0))
        .with("bins", grid.bins())
        .with("range", json!(grid.ranges()))
        .with("n_a", n_a)
        .with("n_b", n_b)
}

/// `Σ_i |p_i − q_i|` over a common product grid, overflow cells included.
/// Bins default to `⌈min(N_A, N_B)^{1/3}⌉` per axis.
pub fn tv_histogram(
    a: &WeightedSamples,
    b: &WeightedSamples,
    bins: Option<usize>,
    range: Option<&[(f64, f64)]>,
) -> Result<DistanceReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim(), context: "histogram TV" });
    }
    let bins = bins.unwrap_or_else(|| default_bins(a.len().min(b.len())));
    let ranges = match range {
        Some(r) if r.len() != a.dim() => {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: r.len(), context: "histogram range" })
        }
        Some(r) => r.to_vec(),
        None => default_ranges(a, b),
    };
    let grid = HistogramGrid::uniform(&ranges, bins)?;
    Ok(finish(&grid.probabilities(a), &grid.probabilities(b), &grid, a.len(), b.len().into()))
}

/// Histogram of a 1D sample against the exact cell probabilities of a law.
pub fn tv_histogram_vs_law(
    a: &WeightedSamples,
    law: &dyn Law1d,
    bins: Option<usize>,
    range: Option<(f64, f64)>,
) -> Result<DistanceReport> {
    if a.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: a.dim(), context: "histogram TV against a law" });
    }
    let bins = bins.unwrap_or_else(|| default_bins(a.len()));
    let range = range.unwrap_or_else(|| {
        let q = weighted_quantiles(a.sorted_atoms(), &[0.001, 0.999]);
        extend(q[0].min(law.quantile(0.001)), q[1].max(law.quantile(0.999)))
    });
    let grid = HistogramGrid::uniform(&[range], bins)?;
    Ok(finish(&grid.probabilities(a), &grid.law_probabilities(law), &grid, a.len(), "analytic".into()))
}

/// `∫ |φ_{0,s₁} − φ_{0,s₂}|` by adaptive quadrature (absolute tolerance
/// 10⁻⁸), split at the density crossing.
pub fn tv_gaussian_1d(s1: f64, s2: f64) -> Result<f64> {
    if !(s1 > 0.0) || !(s2 > 0.0) || !s1.is_finite() || !s2.is_finite() {
        return Err(Error::invalid(format!("Gaussian scales must be positive (got {s1}, {s2})")));
    }
    if s1 == s2 {
        return Ok(0.0);
    }
    let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |x: f64| {
        let (a, b) = (x / lo, x / hi);
        (norm / lo * (-0.5 * a * a).exp() - norm / hi * (-0.5 * b * b).exp()).abs()
    };
    let cross = (2.0 * (hi / lo).ln() * lo * lo * hi * hi / (hi * hi - lo * lo)).sqrt();
    let mut breaks = vec![0.0, cross, cross + 40.0 * lo, cross + 40.0 * hi];
    breaks.dedup();
    let half: f64 = breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| quad::integrate(&f, w[0], w[1], 1e-10)).sum();
    Ok((2.0 * half).min(2.0))
}

/// `(1/200)·min(1, |1 − σ_n²/σ_∞²|)`.
pub fn devroye_lower_bound(var_n: f64, var_inf: f64) -> f64 {
    debug_assert!(var_inf > 0.0);
    (1.0 - var_n / var_inf).abs().min(1.0) / 200.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Gaussian1d;

    #[test]
    fn identical_and_disjoint() {
        let a = WeightedSamples::from_1d(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(tv_histogram(&a, &a, Some(4), None).unwrap().value, 0.0);
        let b = WeightedSamples::from_1d(&[5.1, 5.2, 5.3]).unwrap();
        let r = tv_histogram(&a, &b, Some(4), Some(&[(0.0, 6.0)])).unwrap();
        assert_eq!(r.value, 2.0);
        assert!(tv_histogram(&a, &b, Some(1), None).is_err());
    }

    #[test]
    fn three_bins_by_hand() {
        let a = WeightedSamples::new(1, vec![0.5, 1.5, 2.5], vec![1.0, 1.0, 2.0]).unwrap();
        let b = WeightedSamples::from_1d(&[0.5, 0.6, 2.5, -4.0]).unwrap();
        // cells: under, [0,1), [1,2), [2,3], over
        let p = [0.0, 0.25, 0.25, 0.5, 0.0];
        let q = [0.25, 0.5, 0.0, 0.25, 0.0];
        let expect: f64 = p.iter().zip(&q).map(|(x, y): (&f64, &f64)| (x - y).abs()).sum();
        let r = tv_histogram(&a, &b, Some(3), Some(&[(0.0, 3.0)])).unwrap();
        assert!((r.value - expect).abs() < 1e-15);
        assert_eq!(r.meta["tv_convention"], "mass_2");
    }

    #[test]
    fn default_bin_count() {
        assert_eq!(default_bins(1000), 10);
        assert_eq!(default_bins(1001), 11);
        assert_eq!(default_bins(100_000), 47);
    }

    #[test]
    fn product_grid() {
        let a = WeightedSamples::uniform(2, vec![0.1, 0.1, 0.9, 0.9]).unwrap();
        let b = WeightedSamples::uniform(2, vec![0.1, 0.9, 0.9, 0.1]).unwrap();
        assert_eq!(tv_histogram(&a, &b, Some(2), Some(&[(0.0, 1.0), (0.0, 1.0)])).unwrap().value, 2.0);
    }

    #[test]
    fn law_cells_sum_to_one() {
        let g = Gaussian1d::new(0.0, 1.0).unwrap();
        let grid = HistogramGrid::uniform(&[(-2.0, 2.0)], 8).unwrap();
        let p = grid.law_probabilities(&g);
        assert_eq!(p.len(), 10);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let a = WeightedSamples::from_1d(&[0.0]).unwrap();
        let r = tv_histogram_vs_law(&a, &g, Some(8), Some((-2.0, 2.0))).unwrap();
        assert!((r.value - 2.0 * (1.0 - p[5])).abs() < 1e-14);
    }

    #[test]
    fn gaussian_tv_limits() {
        assert_eq!(tv_gaussian_1d(1.0, 1.0).unwrap(), 0.0);
        assert!(tv_gaussian_1d(1.0, 1e6).unwrap() > 1.99);
        assert!(tv_gaussian_1d(0.0, 1.0).is_err());
        assert_eq!(tv_gaussian_1d(1.0, 2.0).unwrap(), tv_gaussian_1d(2.0, 1.0).unwrap());
    }

    #[test]
    fn devroye_examples() {
        assert_eq!(devroye_lower_bound(1.0, 1.0), 0.0);
        assert_eq!(devroye_lower_bound(0.0, 1.0), 0.005);
        assert!((devroye_lower_bound(1.1, 1.0) - 0.0005).abs() < 1e-15);
    }
}
