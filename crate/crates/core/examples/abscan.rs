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

fn build(kind: &str, n: usize, d: usize, seed: u64) -> (ScoreMatrix, DMatrix<f64>, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(n, d);
    let mut labels = vec![1i8; n];
    match kind {
        "B" => {
            for i in 0..n {
                for j in 0..d {
                    values[(i, j)] = (0.6 + 0.8 * gaussian(&mut rng)).clamp(0.0, 1.0);
                }
            }
        }
        "C" => {
            let means = [0.45, 0.25, 0.20, 0.15];
            for i in 0..n {
                for j in 0..d {
                    values[(i, j)] = (means[j % 4] + 0.1 * gaussian(&mut rng)).clamp(0.01, 0.99);
                }
            }
        }
        "D" => {
            let means = [0.45, 0.25, 0.20, 0.15];
            for i in 0..n {
                let neg = i % 5 == 0;
                if neg {
                    labels[i] = -1;
                }
                for j in 0..d {
                    let m = if neg { means[j % 4] * 0.7 } else { means[j % 4] };
                    values[(i, j)] = (m + 0.1 * gaussian(&mut rng)).clamp(0.01, 0.99);
                }
            }
        }
        _ => unreachable!(),
    }
    let s = ScoreMatrix::new(values, (0..d).map(|j| format!("l{j}")).collect(), Stage::Normalized).unwrap();
    let x = DMatrix::from_fn(n, 2, |_, _| gaussian(&mut rng));
    (s, x, labels)
}

fn main() {
    for kind in ["B", "C", "D"] {
        println!("== generator {kind}");
        let (s, x, y) = build(kind, 500, 4, 42);
        for &p in &[2.0, 100.0] {
            for &tol in &[1e-3, 1e-4] {
                let ipc = OptimizerConfig { p_base: p, locality_enabled: false, max_epochs: 2000, tolerance: tol, ..Default::default() };
                let t0 = Instant::now();
                let (_, ipr) = optimize_interior_point(&s, &x, &y, &ipc).unwrap();
                let ip_t = t0.elapsed().as_secs_f64();
                let fwc = OptimizerConfig { p_base: p, locality_enabled: false, max_epochs: 2_000_000, tolerance: tol, ..Default::default() };
                let t1 = Instant::now();
                let (_, fwr) = optimize_frank_wolfe(&s, &y, p, &fwc).unwrap();
                let fw_t = t1.elapsed().as_secs_f64();
                println!(
                    "p={p:5.1} tol={tol:.0e}: ip {:.4}s ({} ep, conv {}), fw {:.4}s ({} it, conv {}), ratio {:.2}",
                    ip_t, ipr.epochs_used, ipr.converged, fw_t, fwr.epochs_used, fwr.converged, fw_t / ip_t
                );
            }
        }
    }
}
