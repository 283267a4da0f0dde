use locfuse::fusion::{optimize_interior_point, OptimizerConfig};
use locfuse::scorespace::{ScoreMatrix, Stage};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 30;
    let values = DMatrix::from_fn(n, 1, |_, _| rng.random_range(0.2..0.8));
    let s = ScoreMatrix::new(values, vec!["l0".into()], Stage::ZScored).unwrap();
    let x = DMatrix::from_fn(n, 1, |i, _| i as f64);
    let y = vec![1i8; n];
    for epochs in [1, 2, 3, 5, 10, 20, 40, 80, 160, 400] {
        let config = OptimizerConfig {
            p_base: 2.0,
            locality_enabled: false,
            tolerance: 1e-8,
            max_epochs: epochs,
            ..Default::default()
        };
        let (set, report) = optimize_interior_point(&s, &x, &y, &config).unwrap();
        println!(
            "cap {epochs:4}: w = {:.9}, obj = {:.6}, used = {}, converged = {}",
            set.weight_row(0)[0],
            report.final_objective,
            report.epochs_used,
            report.converged
        );
    }
}
