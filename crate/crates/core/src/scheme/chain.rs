use super::empirical::WeightedEmpiricalMeasure;
use super::noise::NoiseSource;
use crate::error::{Error, Result};
use crate::model::Diffusion;
use crate::steps::StepSchedule;

/// Position of the chain after `n` steps, at model time `elapsed = Γ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub n: u64,
    pub elapsed: f64,
}

impl ChainState {
    pub fn start(x0: Vec<f64>) -> Self {
        ChainState { x: x0, n: 0, elapsed: 0.0 }
    }
}

/// Scratch space for drift and diffusion evaluations.
#[derive(Clone, Debug)]
pub struct StepBuffers {
    pub drift: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl StepBuffers {
    pub fn new(model: &dyn Diffusion) -> Self {
        StepBuffers { drift: vec![0.0; model.dim()], sigma: vec![0.0; model.dim() * model.noise_dim()] }
    }
}

/// In-place Euler update `x ← x + γ b(x) + σ(x) ΔW`. Returns `false` when
/// the new state is not finite.
#[inline]
pub fn euler_update(model: &dyn Diffusion, x: &mut [f64], gamma: f64, dw: &[f64], buf: &mut StepBuffers) -> bool {
    let d = x.len();
    let q = dw.len();
    model.drift(x, &mut buf.drift);
    model.diffusion(x, &mut buf.sigma);
    let mut finite = true;
    for i in 0..d {
        let row = &buf.sigma[i * q..(i + 1) * q];
        let noise: f64 = row.iter().zip(dw).map(|(s, w)| s * w).sum();
        x[i] += gamma * buf.drift[i] + noise;
        finite &= x[i].is_finite();
    }
    finite
}

/// One step of the scheme; `dw` is the Brownian increment over the step
/// (already scaled by `√γ`).
pub fn euler_step(state: &ChainState, model: &dyn Diffusion, gamma: f64, dw: &[f64]) -> Result<ChainState> {
    check_dims(model, &state.x, dw)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("step must be > 0 (got {gamma})")));
    }
    let mut x = state.x.clone();
    let mut buf = StepBuffers::new(model);
    if !euler_update(model, &mut x, gamma, dw, &mut buf) {
        return Err(Error::BlowUp { n: state.n + 1, x });
    }
    Ok(ChainState { x, n: state.n + 1, elapsed: state.elapsed + gamma })
}

fn check_dims(model: &dyn Diffusion, x: &[f64], dw: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.len(), context: "state" });
    }
    if dw.len() != model.noise_dim() {
        return Err(Error::DimensionMismatch { expected: model.noise_dim(), got: dw.len(), context: "noise increment" });
    }
    Ok(())
}

/// Value of the continuous-time (genuine) Euler scheme at `Γ_k + t_offset`
/// inside the step `[Γ_k, Γ_k + γ]`:
/// `X̄_{Γ_k} + t b(X̄_{Γ_k}) + σ(X̄_{Γ_k}) W(t)`, where `W(t)` is drawn from
/// the Brownian bridge pinned at `W(γ) = full_increment` using the
/// standard normals `bridge_noise`. The endpoints are returned without
/// touching the bridge noise.
pub fn genuine_value(
    state: &ChainState,
    model: &dyn Diffusion,
    gamma: f64,
    full_increment: &[f64],
    t_offset: f64,
    bridge_noise: &[f64],
) -> Result<Vec<f64>> {
    check_dims(model, &state.x, full_increment)?;
    if !(0.0..=gamma).contains(&t_offset) {
        return Err(Error::OffsetOutOfRange { offset: t_offset, gamma });
    }
    if t_offset == 0.0 {
        return Ok(state.x.clone());
    }
    if t_offset == gamma {
        return Ok(euler_step(state, model, gamma, full_increment)?.x);
    }
    if bridge_noise.len() != full_increment.len() {
        return Err(Error::DimensionMismatch {
            expected: full_increment.len(),
            got: bridge_noise.len(),
            context: "bridge noise",
        });
    }
    let ratio = t_offset / gamma;
    let sd = (t_offset * (gamma - t_offset) / gamma).sqrt();
    let w: Vec<f64> = full_increment.iter().zip(bridge_noise).map(|(inc, z)| ratio * inc + sd * z).collect();
    let mut x = state.x.clone();
    let mut buf = StepBuffers::new(model);
    if !euler_update(model, &mut x, t_offset, &w, &mut buf) {
        return Err(Error::BlowUp { n: state.n, x });
    }
    Ok(x)
}

/// Per-step hook for [`run_chain`].
pub trait Observer {
    /// Called after each step with the pre-step position, its step index,
    /// the step size `γ_{n+1}` and the post-step state.
    fn on_step(&mut self, before: &[f64], n_before: u64, gamma: f64, after: &ChainState);
}

/// Builds the weighted empirical measure `ν̄_n = Γ_n^{-1} Σ γ_k δ_{X̄_{Γ_{k−1}}}`.
#[derive(Clone, Debug)]
pub struct EmpiricalAccumulator {
    pub measure: WeightedEmpiricalMeasure,
}

impl EmpiricalAccumulator {
    pub fn new(dim: usize) -> Self {
        EmpiricalAccumulator { measure: WeightedEmpiricalMeasure::new(dim) }
    }
}

impl Observer for EmpiricalAccumulator {
    fn on_step(&mut self, before: &[f64], _n_before: u64, gamma: f64, _after: &ChainState) {
        self.measure.accumulate(before, gamma);
    }
}

/// Records the state at chosen step indices.
#[derive(Clone, Debug, Default)]
pub struct SnapshotRecorder {
    steps: Vec<u64>,
    pub snapshots: Vec<ChainState>,
}

impl SnapshotRecorder {
    pub fn at_steps(mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        SnapshotRecorder { steps, snapshots: Vec::new() }
    }

    /// Snapshots at the last grid time not after each `t`, i.e. step `N(t)`.
    pub fn at_times(schedule: &StepSchedule, times: &[f64]) -> Self {
        Self::at_steps(times.iter().map(|&t| schedule.n_of_t(t)).collect())
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }
}

impl Observer for SnapshotRecorder {
    fn on_step(&mut self, _before: &[f64], _n_before: u64, _gamma: f64, after: &ChainState) {
        if self.steps.binary_search(&after.n).is_ok() {
            self.snapshots.push(after.clone());
        }
    }
}

/// Records `V(X̄_{Γ_n})` at chosen steps, for moment tracking.
pub struct LyapunovRecorder<'a> {
    v: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    steps: Vec<u64>,
    pub values: Vec<(u64, f64)>,
}

impl<'a> LyapunovRecorder<'a> {
    pub fn new(v: &'a (dyn Fn(&[f64]) -> f64 + Sync), mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        LyapunovRecorder { v, steps, values: Vec::new() }
    }
}

impl Observer for LyapunovRecorder<'_> {
    fn on_step(&mut self, _before: &[f64], _n_before: u64, _gamma: f64, after: &ChainState) {
        if self.steps.binary_search(&after.n).is_ok() {
            self.values.push((after.n, (self.v)(&after.x)));
        }
    }
}

/// Runs `n_steps` of the decreasing-step scheme from `x0`, drawing the
/// Brownian increments from `noise`.
pub fn run_chain(
    model: &dyn Diffusion,
    schedule: &StepSchedule,
    n_steps: u64,
    x0: &[f64],
    noise: &mut NoiseSource,
    observers: &mut [&mut dyn Observer],
) -> Result<ChainState> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len(), context: "initial point" });
    }
    let mut state = ChainState::start(x0.to_vec());
    let mut before = x0.to_vec();
    let mut dw = vec![0.0; model.noise_dim()];
    let mut buf = StepBuffers::new(model);
    for k in 1..=n_steps {
        let gamma = schedule.gamma(k)?;
        noise.increments(gamma, &mut dw);
        if !observers.is_empty() {
            before.copy_from_slice(&state.x);
        }
        if !euler_update(model, &mut state.x, gamma, &dw, &mut buf) {
            return Err(Error::BlowUp { n: k, x: state.x });
        }
        state.n = k;
        state.elapsed += gamma;
        for obs in observers.iter_mut() {
            obs.on_step(&before, k - 1, gamma, &state);
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, Ou};
    use std::f64::consts::SQRT_2;

    #[test]
    fn euler_step_examples() {
        let frozen = FnModel::scalar(|_| 0.0, |_| 0.0);
        let s = euler_step(&ChainState::start(vec![0.7]), &frozen, 0.1, &[0.3]).unwrap();
        assert_eq!(s.x, vec![0.7]);
        assert_eq!((s.n, s.elapsed), (1, 0.1));

        let ou = Ou::new(1.0, SQRT_2, 1).unwrap();
        let s = euler_step(&ChainState::start(vec![1.0]), &ou, 0.1, &[0.0]).unwrap();
        assert!((s.x[0] - 0.9).abs() < 1e-15);
        let s = euler_step(&ChainState::start(vec![1.0]), &ou, 0.1, &[0.2]).unwrap();
        assert!((s.x[0] - (0.9 + SQRT_2 * 0.2)).abs() < 1e-15);
        assert!((s.x[0] - 1.182843).abs() < 1e-6);
    }

    #[test]
    fn blow_up_is_reported_with_step_index() {
        let m = FnModel::scalar(|x| x * x * x * 1e200, |_| 0.0);
        let err = euler_step(&ChainState { x: vec![1e200], n: 4, elapsed: 1.0 }, &m, 1.0, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::BlowUp { n: 5, .. }));

        let schedule = StepSchedule::polynomial(1.0, 0.0, 100).unwrap();
        let expanding = FnModel::scalar(|x| 1e6 * x, |_| 1.0);
        let err = run_chain(&expanding, &schedule, 100, &[1.0], &mut NoiseSource::new(1, 0), &mut []).unwrap_err();
        match err {
            Error::BlowUp { n, .. } => assert!(n > 1 && n < 100),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn genuine_endpoints_and_range() {
        let ou = Ou::new(1.0, SQRT_2, 1).unwrap();
        let s = ChainState::start(vec![0.4]);
        assert_eq!(genuine_value(&s, &ou, 0.2, &[0.1], 0.0, &[]).unwrap(), vec![0.4]);
        let end = genuine_value(&s, &ou, 0.2, &[0.1], 0.2, &[]).unwrap();
        assert_eq!(end, euler_step(&s, &ou, 0.2, &[0.1]).unwrap().x);
        assert!(matches!(
            genuine_value(&s, &ou, 0.2, &[0.1], 0.3, &[0.0]),
            Err(Error::OffsetOutOfRange { .. })
        ));
    }

    #[test]
    fn genuine_bridge_mean() {
        let ou = Ou::new(1.0, SQRT_2, 1).unwrap();
        let s = ChainState::start(vec![0.5]);
        let (gamma, inc) = (0.2, 0.3);
        let mut noise = NoiseSource::new(3, 0);
        let n = 40_000;
        let mut z = [0.0];
        let mean = (0..n)
            .map(|_| {
                noise.standard_normals(&mut z);
                genuine_value(&s, &ou, gamma, &[inc], gamma / 2.0, &z).unwrap()[0]
            })
            .sum::<f64>()
            / n as f64;
        let expect = 0.5 + 0.1 * (-0.5) + SQRT_2 * inc / 2.0;
        // bridge sd at the midpoint is sqrt(γ/4), times σ
        let se = SQRT_2 * (gamma / 4.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "{mean} vs {expect}");
    }

    #[test]
    fn run_chain_zero_steps_and_determinism() {
        let ou = Ou::new(1.0, SQRT_2, 2).unwrap();
        let schedule = StepSchedule::polynomial(0.5, 0.9, 1000).unwrap();
        let s = run_chain(&ou, &schedule, 0, &[1.0, 2.0], &mut NoiseSource::new(1, 0), &mut []).unwrap();
        assert_eq!(s, ChainState::start(vec![1.0, 2.0]));

        let a = run_chain(&ou, &schedule, 1000, &[1.0, 2.0], &mut NoiseSource::new(9, 4), &mut []).unwrap();
        let b = run_chain(&ou, &schedule, 1000, &[1.0, 2.0], &mut NoiseSource::new(9, 4), &mut []).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.elapsed, schedule.gamma_sum(1000).unwrap());
    }

    #[test]
    fn observers_see_pre_step_positions() {
        let schedule = StepSchedule::explicit(vec![1.0, 0.5]).unwrap();
        // b = 2 and no noise: x0 = 0, X̄_Γ1 = 2
        let m = FnModel::scalar(|_| 2.0, |_| 0.0);
        let mut acc = EmpiricalAccumulator::new(1);
        let mut snaps = SnapshotRecorder::at_steps(vec![1, 2]);
        run_chain(&m, &schedule, 2, &[0.0], &mut NoiseSource::new(0, 0), &mut [&mut acc, &mut snaps]).unwrap();
        assert_eq!(acc.measure.points(), &[0.0, 2.0]);
        assert!((acc.measure.integrate(|x| x[0]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(snaps.snapshots.len(), 2);
        assert_eq!(snaps.snapshots[1].x, vec![3.0]);
    }
}
