mod common;

use std::f64::consts::SQRT_2;

use langstep::model::{FnModel, HeavyTail, Ou};
use langstep::ou_oracle::OuOracle;
use langstep::scheme::{
    euler_step, simulate_marginals, tangent_step, BlowUpPolicy, ChainState, EnsembleSpec, Marginals, NoiseSource,
    TangentState,
};
use langstep::steps::StepSchedule;

use common::{chi2_variance_interval, sample_variance};

fn ensemble(n_paths: usize, checkpoints: Vec<u64>, seed: u64) -> EnsembleSpec {
    EnsembleSpec { n_paths, checkpoints, x0: vec![0.0], seed, first_stream: 0, policy: BlowUpPolicy::Abort }
}

fn in_pool(threads: usize, f: impl FnOnce() -> Marginals + Send) -> Marginals {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn marginals_do_not_depend_on_thread_count() {
    let model = HeavyTail::new(1, 1.0).unwrap();
    let schedule = StepSchedule::polynomial(0.3, 0.6, 500).unwrap();
    let spec = ensemble(257, vec![10, 500], 42);
    let one = in_pool(1, || simulate_marginals(&model, &schedule, &spec).unwrap());
    let four = in_pool(4, || simulate_marginals(&model, &schedule, &spec).unwrap());
    assert_eq!(one.streams, four.streams);
    assert_eq!(one.samples, four.samples);
}

#[test]
fn ou_marginal_variance_follows_the_recursion() {
    let schedule = StepSchedule::polynomial(0.8, 0.7, 2_000).unwrap();
    let oracle = OuOracle::new(1.0, SQRT_2, schedule.clone()).unwrap();
    let checkpoints = vec![1, 5, 50, 2_000];
    let m = simulate_marginals(&Ou::new(1.0, SQRT_2, 1).unwrap(), &schedule, &ensemble(20_000, checkpoints.clone(), 3))
        .unwrap();
    for (c, &n) in checkpoints.iter().enumerate() {
        let v = sample_variance(&m.coordinate(c, 0));
        let (lo, hi) = chi2_variance_interval(oracle.variance_recursion(n).unwrap(), 20_000);
        assert!(lo <= v && v <= hi, "n={n}: {v} not in [{lo}, {hi}]");
    }
}

#[test]
fn driftless_chain_is_brownian_at_partial_sums() {
    let bm = FnModel::scalar(|_| 0.0, |_| 1.0);
    let schedule = StepSchedule::polynomial(0.5, 0.5, 400).unwrap();
    let checkpoints = vec![3, 40, 400];
    let m = simulate_marginals(&bm, &schedule, &ensemble(20_000, checkpoints.clone(), 5)).unwrap();
    for (c, &n) in checkpoints.iter().enumerate() {
        let x = m.coordinate(c, 0);
        let t = schedule.gamma_sum(n).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 4.0 * (t / x.len() as f64).sqrt(), "n={n}: mean {mean}");
        let (lo, hi) = chi2_variance_interval(t, x.len());
        let v = sample_variance(&x);
        assert!(lo <= v && v <= hi, "n={n}: {v} not in [{lo}, {hi}] (Gamma_n = {t})");
    }
}

#[test]
fn tangent_flow_matches_finite_differences() {
    let model = HeavyTail::new(2, 0.5).unwrap();
    let schedule = StepSchedule::polynomial(0.1, 0.5, 50).unwrap();
    let mut noise = NoiseSource::new(17, 0);
    let increments: Vec<Vec<f64>> = (1..=50)
        .map(|k| {
            let mut dw = vec![0.0; 2];
            noise.increments(schedule.gamma(k).unwrap(), &mut dw);
            dw
        })
        .collect();
    let run = |x0: Vec<f64>| {
        let mut s = ChainState::start(x0);
        for (k, dw) in increments.iter().enumerate() {
            s = euler_step(&s, &model, schedule.gamma(k as u64 + 1).unwrap(), dw).unwrap();
        }
        s.x
    };
    let x0 = vec![0.7, -0.4];
    let mut y = TangentState::identity(2);
    let mut s = ChainState::start(x0.clone());
    for (k, dw) in increments.iter().enumerate() {
        let g = schedule.gamma(k as u64 + 1).unwrap();
        y = tangent_step(&y, &model, &s.x, g, dw).unwrap();
        s = euler_step(&s, &model, g, dw).unwrap();
    }
    let h = 1e-6;
    for k in 0..2 {
        let (mut up, mut down) = (x0.clone(), x0.clone());
        up[k] += h;
        down[k] -= h;
        let (xu, xd) = (run(up), run(down));
        for i in 0..2 {
            let fd = (xu[i] - xd[i]) / (2.0 * h);
            assert!((fd - y.get(i, k)).abs() < 1e-6, "({i}, {k}): fd {fd} vs {}", y.get(i, k));
        }
    }
}
