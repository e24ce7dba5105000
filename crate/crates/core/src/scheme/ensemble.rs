use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{run_chain, SnapshotRecorder};
use super::noise::NoiseSource;
use crate::error::{Error, Result};
use crate::model::Diffusion;
use crate::steps::StepSchedule;

/// What to do with a path whose state stops being finite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpPolicy {
    #[default]
    Abort,
    DropPath,
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    /// Step indices at which the cross-path marginal is recorded.
    pub checkpoints: Vec<u64>,
    pub x0: Vec<f64>,
    pub seed: u64,
    /// Stream id of path 0; path `p` uses stream `first_stream + p`.
    pub first_stream: u64,
    pub policy: BlowUpPolicy,
}

/// Cross-path samples of `X̄_{Γ_n}` at each checkpoint.
#[derive(Clone, Debug)]
pub struct Marginals {
    pub dim: usize,
    pub checkpoints: Vec<u64>,
    /// Stream ids of the surviving paths, increasing.
    pub streams: Vec<u64>,
    /// `samples[c]` is the row-major `streams.len() × dim` sample at
    /// checkpoint `c`.
    pub samples: Vec<Vec<f64>>,
    pub dropped: usize,
}

impl Marginals {
    /// Coordinate `i` of the sample at checkpoint index `c`.
    pub fn coordinate(&self, c: usize, i: usize) -> Vec<f64> {
        self.samples[c].chunks_exact(self.dim).map(|p| p[i]).collect()
    }
}

/// Runs `n_paths` independent chains in parallel and gathers their states
/// at the checkpoints. Results are ordered by stream id whatever the
/// thread count.
pub fn simulate_marginals(model: &dyn Diffusion, schedule: &StepSchedule, spec: &EnsembleSpec) -> Result<Marginals> {
    let d = model.dim();
    if spec.x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.x0.len(), context: "initial point" });
    }
    let mut checkpoints = spec.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let per_path: Vec<(u64, Result<Vec<f64>>)> = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let stream = spec.first_stream + p;
            let mut noise = NoiseSource::new(spec.seed, stream);
            let mut snaps = SnapshotRecorder::at_steps(checkpoints.clone());
            let out = run_chain(model, schedule, horizon, &spec.x0, &mut noise, &mut [&mut snaps]).map(|_| {
                let mut flat = Vec::with_capacity(checkpoints.len() * d);
                for &c in &checkpoints {
                    if c == 0 {
                        flat.extend_from_slice(&spec.x0);
                    } else {
                        let s = snaps.snapshots.iter().find(|s| s.n == c).expect("snapshot recorded");
                        flat.extend_from_slice(&s.x);
                    }
                }
                flat
            });
            (stream, out)
        })
        .collect();

    let mut out = Marginals {
        dim: d,
        samples: vec![Vec::with_capacity(spec.n_paths * d); checkpoints.len()],
        checkpoints,
        streams: Vec::with_capacity(spec.n_paths),
        dropped: 0,
    };
    for (stream, r) in per_path {
        match r {
            Ok(flat) => {
                out.streams.push(stream);
                for (c, chunk) in flat.chunks_exact(d).enumerate() {
                    out.samples[c].extend_from_slice(chunk);
                }
            }
            Err(Error::BlowUp { .. }) if spec.policy == BlowUpPolicy::DropPath => out.dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
