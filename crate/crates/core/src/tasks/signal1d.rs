use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::Result;
use crate::tensor::{Real, Tensor};

/// `f(x) = Σ sin(2π kᵢ x + φᵢ)` with `kᵢ = 5, 10, …, 50`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1DSpec {
    pub frequencies: [f64; 10],
    pub phases: [f64; 10],
    pub seed: u64,
}

pub const FREQUENCIES: [f64; 10] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];

/// Phases uniform in `[0, 2π)`.
pub fn make_signal1d(seed: u64) -> Signal1DSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal1DSpec {
        frequencies: FREQUENCIES,
        phases: std::array::from_fn(|_| rng.random_range(0.0..TAU)),
        seed,
    }
}

pub fn eval_signal1d(spec: &Signal1DSpec, x: f64) -> f64 {
    spec.frequencies
        .iter()
        .zip(&spec.phases)
        .map(|(k, p)| (TAU * k * x + p).sin())
        .sum()
}

/// `samples` evenly spaced points covering `[0, 1]` inclusive.
pub fn signal1d_dataset<T: Real>(spec: &Signal1DSpec, samples: usize) -> Result<Dataset<T>> {
    let xs: Vec<f64> = match samples {
        0 => vec![],
        1 => vec![0.5],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    let ys: Vec<f64> = xs.iter().map(|&x| eval_signal1d(spec, x)).collect();
    Dataset::new(
        Tensor::from_f64(vec![xs.len(), 1], &xs)?,
        Tensor::from_f64(vec![ys.len(), 1], &ys)?,
        1,
    )
}
