//! Per-path Gaussian noise streams.
//!
//! Each path owns a ChaCha8 stream keyed by `(master seed, stream id)`;
//! Gaussians are drawn with the ziggurat sampler of `rand_distr`
//! (`StandardNormal`). A draw is one vector of standard normals and the
//! counter is the number of vectors drawn so far, so `(seed, stream,
//! counter)` identifies a draw and replaying a stream reproduces it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct NoiseSource {
    seed: u64,
    stream: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NoiseSource { seed, stream, counter: 0, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of draws taken so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Fills `out` with independent standard normals (one draw).
    #[inline]
    pub fn standard_normals(&mut self, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.rng.sample(StandardNormal);
        }
        self.counter += 1;
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.counter += 1;
        self.rng.sample(StandardNormal)
    }

    /// Brownian increments over a time step `dt`: `√dt · Z`.
    #[inline]
    pub fn increments(&mut self, dt: f64, out: &mut [f64]) {
        self.standard_normals(out);
        let s = dt.sqrt();
        for o in out.iter_mut() {
            *o *= s;
        }
    }

    /// The draw with index `counter` of a stream whose draws all have
    /// length `len`, recomputed by replay.
    pub fn replay(seed: u64, stream: u64, counter: u64, len: usize) -> Vec<f64> {
        let mut src = NoiseSource::new(seed, stream);
        let mut out = vec![0.0; len];
        for _ in 0..=counter {
            src.standard_normals(&mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draw() {
        let mut a = NoiseSource::new(7, 3);
        let mut draws = Vec::new();
        for _ in 0..5 {
            let mut v = [0.0; 2];
            a.standard_normals(&mut v);
            draws.push(v);
        }
        assert_eq!(a.counter(), 5);
        for (c, d) in draws.iter().enumerate() {
            assert_eq!(NoiseSource::replay(7, 3, c as u64, 2), d.to_vec());
        }
    }

    #[test]
    fn streams_differ_and_look_independent() {
        let n = 20_000;
        let mut a = NoiseSource::new(1, 0);
        let mut b = NoiseSource::new(1, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.standard_normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.standard_normal()).collect();
        assert_ne!(xs[..10], ys[..10]);
        let corr = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        // N(0, 1/n) under independence
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "{corr}");
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.04);
    }
}
