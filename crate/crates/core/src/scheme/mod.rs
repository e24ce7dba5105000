//! The decreasing-step Euler scheme
//! `X̄_{Γ_{n+1}} = X̄_{Γ_n} + γ_{n+1} b(X̄_{Γ_n}) + σ(X̄_{Γ_n})(W_{Γ_{n+1}} − W_{Γ_n})`
//! together with its continuous interpolation, the tangent process, the
//! Bismut–Elworthy–Li gradient estimator and the weighted empirical measure.

mod bel;
mod chain;
mod empirical;
mod ensemble;
pub mod export;
mod noise;
mod tangent;

pub use bel::{bel_gradient, semigroup_samples, BelEstimate};
pub use chain::{
    euler_step, euler_update, genuine_value, run_chain, ChainState, EmpiricalAccumulator, LyapunovRecorder, Observer,
    SnapshotRecorder, StepBuffers,
};
pub use empirical::WeightedEmpiricalMeasure;
pub use ensemble::{simulate_marginals, BlowUpPolicy, EnsembleSpec, Marginals};
pub use noise::NoiseSource;
pub use tangent::{tangent_step, TangentState};
