//! Shared generators for the criterion benchmarks.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use locfuse::scorespace::{apply_zscore, fit_zscore, ScoreMatrix};

/// Seeded standard-normal matrix.
pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    };
    DMatrix::from_fn(n, d, |_, _| normal())
}

/// Z-scored synthetic score matrix with a positive shared signal.
pub fn synthetic_scores(n: usize, d: usize, seed: u64) -> ScoreMatrix {
    let noise = gaussian_matrix(n, d, seed);
    let values = DMatrix::from_fn(n, d, |i, j| 0.7 + 0.8 * noise[(i, j)]);
    let raw = ScoreMatrix::raw(values, (0..d).map(|j| format!("l{j}")).collect()).unwrap();
    let state = fit_zscore(&raw).unwrap();
    apply_zscore(&state, &raw).unwrap()
}
