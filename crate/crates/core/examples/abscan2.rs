use locfuse::fusion::{optimize_frank_wolfe, optimize_interior_point, OptimizerConfig};
use locfuse::scorespace::{ScoreMatrix, Stage};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

/// Two-tier margins: `high_frac` rows sit comfortably above the unit margin
/// at boundary weights, the rest sit clearly below; no row hugs the kink.
fn build(n: usize, d: usize, seed: u64, low: f64, high: f64, noise: f64, high_frac: f64) -> (ScoreMatrix, DMatrix<f64>, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(n, d);
    for i in 0..n {
        let tier = if (i as f64) < high_frac * n as f64 { high } else { low };
        for j in 0..d {
            values[(i, j)] = (tier + noise * gaussian(&mut rng)).clamp(0.001, 0.999);
        }
    }
    let s = ScoreMatrix::new(values, (0..d).map(|j| format!("l{j}")).collect(), Stage::Normalized).unwrap();
    let x = DMatrix::from_fn(n, 2, |_, _| gaussian(&mut rng));
    (s, x, vec![1i8; n])
}

fn main() {
    for (low, high, noise, hf) in [
        (0.10, 0.40, 0.03, 0.4),
        (0.10, 0.45, 0.05, 0.5),
        (0.05, 0.35, 0.02, 0.3),
    ] {
        println!("== low={low} high={high} noise={noise} high_frac={hf}");
        let (s, x, y) = build(500, 4, 42, low, high, noise, hf);
        for &p in &[32.0/31.0, 8.0/7.0, 2.0, 100.0] {
            for &tol in &[1e-2, 1e-3, 1e-4] {
                let ipc = OptimizerConfig { p_base: p, locality_enabled: false, max_epochs: 2000, tolerance: tol, ..Default::default() };
                let t0 = Instant::now();
                let (_, ipr) = optimize_interior_point(&s, &x, &y, &ipc).unwrap();
                let ip_t = t0.elapsed().as_secs_f64();
                let fwc = OptimizerConfig { p_base: p, locality_enabled: false, max_epochs: 2_000_000, tolerance: tol, ..Default::default() };
                let t1 = Instant::now();
                let (_, fwr) = optimize_frank_wolfe(&s, &y, p, &fwc).unwrap();
                let fw_t = t1.elapsed().as_secs_f64();
                println!(
                    "p={p:8.4} tol={tol:.0e}: ip {ip_t:.5}s ({:4} ep, conv {}), fw {fw_t:.5}s ({:7} it, conv {}), ratio {:.2}",
                    ipr.epochs_used, ipr.converged, fwr.epochs_used, fwr.converged, fw_t / ip_t
                );
            }
        }
    }
}
