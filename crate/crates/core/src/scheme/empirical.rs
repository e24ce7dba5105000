use crate::metrics::WeightedSamples;

/// `γ_k`-weighted occupation measure of one chain.
///
/// Weights are accumulated left to right, so `total_weight` equals the
/// driving schedule's `Γ_n` bit for bit, and `∫1 dν̄_n` is exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl WeightedEmpiricalMeasure {
    pub fn new(dim: usize) -> Self {
        WeightedEmpiricalMeasure { dim, points: Vec::new(), weights: Vec::new(), total_weight: 0.0 }
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

    /// Flat row-major storage of the atoms.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Adds the pre-step position `x = X̄_{Γ_{k−1}}` with weight `γ_k`.
    pub fn accumulate(&mut self, x: &[f64], gamma: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.points.extend_from_slice(x);
        self.weights.push(gamma);
        self.total_weight += gamma;
    }

    /// `∫ f dν̄_n`. Returns NaN on an empty measure.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.points.chunks_exact(self.dim).zip(&self.weights) {
            acc += w * f(p);
        }
        acc / self.total_weight
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.integrate(|x| x[i])).collect()
    }

    pub fn to_samples(&self) -> WeightedSamples {
        WeightedSamples::new(self.dim, self.points.clone(), self.weights.clone())
            .expect("weights are positive steps")
    }
}
