use serde::Serialize;

use crate::scheme::Marginals;

/// Cross-path averages `Ê[V^a(X̄_{Γ_n})]` per checkpoint and exponent.
#[derive(Clone, Debug, Serialize)]
pub struct MomentTrack {
    pub checkpoints: Vec<u64>,
    pub exponents: Vec<f64>,
    /// `means[c][e]` for checkpoint `c` and exponent `e`.
    pub means: Vec<Vec<f64>>,
    /// `(checkpoint, exponent)` pairs with a mean above `factor · V^a(x0)`.
    pub flagged: Vec<(u64, f64)>,
    pub factor: f64,
}

/// Moment series along an ensemble; `factor` defaults to 10³ at call sites.
pub fn moment_track(
    marginals: &Marginals,
    v: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    exponents: &[f64],
    factor: f64,
) -> MomentTrack {
    let d = marginals.dim;
    let v0 = v(x0);
    let mut means = Vec::with_capacity(marginals.checkpoints.len());
    let mut flagged = Vec::new();
    for (c, &n) in marginals.checkpoints.iter().enumerate() {
        let values: Vec<f64> = marginals.samples[c].chunks_exact(d).map(v).collect();
        let row: Vec<f64> = exponents
            .iter()
            .map(|&a| values.iter().map(|x| x.powf(a)).sum::<f64>() / values.len() as f64)
            .collect();
        for (&a, &m) in exponents.iter().zip(&row) {
            if !(m <= factor * v0.powf(a)) {
                flagged.push((n, a));
            }
        }
        means.push(row);
    }
    MomentTrack { checkpoints: marginals.checkpoints.clone(), exponents: exponents.to_vec(), means, flagged, factor }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, Ou};
    use crate::scheme::{simulate_marginals, BlowUpPolicy, EnsembleSpec};
    use crate::steps::StepSchedule;

    fn quad_v(x: &[f64]) -> f64 {
        1.0 + x[0] * x[0]
    }

    fn spec(x0: f64, n_paths: usize, checkpoints: Vec<u64>) -> EnsembleSpec {
        EnsembleSpec { n_paths, checkpoints, x0: vec![x0], seed: 2, first_stream: 0, policy: BlowUpPolicy::Abort }
    }

    #[test]
    fn frozen_chain_is_constant() {
        let m = FnModel::scalar(|_| 0.0, |_| 0.0);
        let schedule = StepSchedule::polynomial(0.5, 0.9, 100).unwrap();
        let marg = simulate_marginals(&m, &schedule, &spec(0.7, 4, vec![1, 10, 100])).unwrap();
        let t = moment_track(&marg, &quad_v, &[0.7], &[1.0, 2.0], 1e3);
        for row in &t.means {
            assert_eq!(row[0], 1.49);
            assert!((row[1] - 1.49f64.powi(2)).abs() < 1e-14);
        }
        assert!(t.flagged.is_empty());
    }

    #[test]
    fn ou_plateaus() {
        let ou = Ou::new(1.0, std::f64::consts::SQRT_2, 1).unwrap();
        let schedule = StepSchedule::polynomial(0.05, 0.0, 400).unwrap();
        let marg = simulate_marginals(&ou, &schedule, &spec(0.0, 20_000, vec![400])).unwrap();
        let t = moment_track(&marg, &quad_v, &[0.0], &[1.0, 2.0], 1e3);
        // stationary Euler variance with γ = 0.05 is 1/(1 − γ/2) ≈ 1.026
        let s2 = 1.0 / (1.0 - 0.025);
        assert!((t.means[0][0] - (1.0 + s2)).abs() < 0.05, "{:?}", t.means);
        assert!((t.means[0][1] - (1.0 + 2.0 * s2 + 3.0 * s2 * s2)).abs() < 0.3, "{:?}", t.means);
    }
}
