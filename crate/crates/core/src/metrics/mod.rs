//! Distances between sample clouds and laws: exact and sliced W₁, a binned
//! W₁ lower bound, histogram and quadrature total variation, and moment
//! tracking along chains.
//!
//! Total variation follows the mass-2 convention
//! `‖μ − μ′‖_TV = sup{∫f d(μ − μ′) : ‖f‖_sup ≤ 1} ∈ [0, 2]`.

mod law;
mod moments;
pub mod quad;
mod tv;
mod w1;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use law::{Gaussian1d, Law1d, ScaledStudentT};
pub use moments::{moment_track, MomentTrack};
pub use tv::{devroye_lower_bound, tv_gaussian_1d, tv_histogram, tv_histogram_vs_law, HistogramGrid};
pub use w1::{symmetric_edges, w1_binned_1d, w1_exact_1d, w1_sliced, CdfIntegral, Side};

use crate::error::{Error, Result};

/// Row-major point cloud with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSamples {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch { expected: dim * weights.len(), got: points.len(), context: "samples" });
        }
        if weights.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("sample weights must be positive and finite (got {w})")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("sample points must be finite"));
        }
        Ok(WeightedSamples { dim, points, weights })
    }

    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = if dim == 0 { 0 } else { points.len() / dim };
        Self::new(dim, points, vec![1.0; n])
    }

    pub fn from_1d(values: &[f64]) -> Result<Self> {
        Self::uniform(1, values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// One-dimensional samples `(θ | x_k)` with the same weights.
    pub fn project(&self, direction: &[f64]) -> WeightedSamples {
        assert_eq!(direction.len(), self.dim);
        let points = self.points.chunks_exact(self.dim).map(|p| p.iter().zip(direction).map(|(a, b)| a * b).sum()).collect();
        WeightedSamples { dim: 1, points, weights: self.weights.clone() }
    }

    pub fn coordinate(&self, i: usize) -> WeightedSamples {
        let points = self.points.chunks_exact(self.dim).map(|p| p[i]).collect();
        WeightedSamples { dim: 1, points, weights: self.weights.clone() }
    }

    /// Atoms of a 1D cloud sorted by position, with normalized weights.
    pub(crate) fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        debug_assert_eq!(self.dim, 1);
        let total = self.total_weight();
        let mut atoms: Vec<(f64, f64)> = self.points.iter().zip(&self.weights).map(|(&x, &w)| (x, w / total)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[serde(rename = "w1_exact_1d")]
    W1Exact1d,
    W1Sliced,
    #[serde(rename = "w1_binned_1d")]
    W1Binned1d,
    TvHistogram,
    TvQuadrature,
}

impl Estimator {
    pub const ALL: [Estimator; 5] =
        [Estimator::W1Exact1d, Estimator::W1Sliced, Estimator::W1Binned1d, Estimator::TvHistogram, Estimator::TvQuadrature];

    pub fn tag(self) -> &'static str {
        match self {
            Estimator::W1Exact1d => "w1_exact_1d",
            Estimator::W1Sliced => "w1_sliced",
            Estimator::W1Binned1d => "w1_binned_1d",
            Estimator::TvHistogram => "tv_histogram",
            Estimator::TvQuadrature => "tv_quadrature",
        }
    }

    pub fn is_tv(self) -> bool {
        matches!(self, Estimator::TvHistogram | Estimator::TvQuadrature)
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL.into_iter().find(|e| e.tag() == s).ok_or_else(|| {
            let tags: Vec<&str> = Estimator::ALL.iter().map(|e| e.tag()).collect();
            Error::invalid(format!("unknown estimator {s:?} (expected one of {})", tags.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub estimator: Estimator,
    pub value: f64,
    /// Resolution data: bins, projections, sample sizes, conventions.
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl DistanceReport {
    pub(crate) fn new(estimator: Estimator, value: f64) -> Self {
        let mut meta = BTreeMap::new();
        if estimator.is_tv() {
            meta.insert("tv_convention".into(), "mass_2".into());
        }
        DistanceReport { estimator, value, meta }
    }

    pub(crate) fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    /// One JSON row `{estimator, value, meta…}`.
    pub fn to_json_row(&self) -> serde_json::Value {
        let mut row = serde_json::Map::new();
        row.insert("estimator".into(), self.estimator.tag().into());
        row.insert("value".into(), self.value.into());
        for (k, v) in &self.meta {
            row.insert(k.clone(), v.clone());
        }
        serde_json::Value::Object(row)
    }
}
