mod common;

use langstep::metrics::{
    devroye_lower_bound, tv_gaussian_1d, tv_histogram, tv_histogram_vs_law, w1_exact_1d, w1_sliced, Gaussian1d, Side,
    WeightedSamples,
};
use langstep::scheme::NoiseSource;
use proptest::prelude::*;

use common::{tv_gaussian_trapezoid, w1_lp, TV_GAUSSIAN_1_2_TRAPEZOID};

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..=8)
}

fn samples(v: &[(f64, f64)]) -> WeightedSamples {
    WeightedSamples::new(1, v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.1).collect()).unwrap()
}

fn w1(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    w1_exact_1d(Side::Samples(&samples(a)), Side::Samples(&samples(b))).unwrap().value
}

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut z = vec![0.0; n];
    NoiseSource::new(seed, 0).standard_normals(&mut z);
    z
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_w1_is_the_transport_optimum(a in atoms(), b in atoms()) {
        let got = w1(&a, &b);
        let want = w1_lp(&a, &b);
        prop_assert!((got - want).abs() <= 1e-10, "{} vs LP {}", got, want);
    }

    #[test]
    fn exact_w1_is_a_metric(a in atoms(), b in atoms(), c in atoms()) {
        let (ab, ba) = (w1(&a, &b), w1(&b, &a));
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(w1(&a, &a).abs() <= 1e-12);
        prop_assert!(ab <= w1(&a, &c) + w1(&c, &b) + 1e-12);
    }

    #[test]
    fn histogram_tv_is_symmetric_and_bounded(a in atoms(), b in atoms(), bins in 2usize..20) {
        let (sa, sb) = (samples(&a), samples(&b));
        let ab = tv_histogram(&sa, &sb, Some(bins), None).unwrap().value;
        let ba = tv_histogram(&sb, &sa, Some(bins), None).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
    }
}

#[test]
fn gaussian_tv_matches_trapezoid() {
    let got = tv_gaussian_1d(1.0, 2.0).unwrap();
    assert!((got - TV_GAUSSIAN_1_2_TRAPEZOID).abs() < 1e-6);
    for (s1, s2) in [(0.3, 1.0), (1.0, 1.1), (2.0, 7.0)] {
        let want = tv_gaussian_trapezoid(s1, s2, 40.0 * s2, 200_000);
        assert!((tv_gaussian_1d(s1, s2).unwrap() - want).abs() < 1e-6, "({s1}, {s2})");
    }
}

#[test]
fn devroye_bound_sits_below_gaussian_tv() {
    for i in 0..100 {
        let r = 0.1 * 100f64.powf(i as f64 / 99.0);
        let tv = tv_gaussian_1d(r.sqrt(), 1.0).unwrap();
        assert!(devroye_lower_bound(r, 1.0) <= tv, "ratio {r}");
    }
}

#[test]
fn sliced_w1_of_a_cloud_with_itself_is_zero() {
    let z = normals(4, 600);
    let a = WeightedSamples::uniform(3, z).unwrap();
    assert_eq!(w1_sliced(&a, &a, 32, 9).unwrap().value, 0.0);
}

#[test]
fn histogram_tv_noise_floor() {
    let a = WeightedSamples::from_1d(&normals(1, 100_000)).unwrap();
    let b = WeightedSamples::from_1d(&normals(2, 100_000)).unwrap();
    let nu = Gaussian1d::new(0.0, 1.0).unwrap();
    assert!(tv_histogram(&a, &b, Some(46), None).unwrap().value < 0.05);
    assert!(tv_histogram_vs_law(&a, &nu, Some(46), None).unwrap().value < 0.05);
}
