use locfuse::experiment::{timing_ablation, AblationConfig};

fn main() {
    let config = AblationConfig {
        p_values: vec![32.0 / 31.0, 8.0 / 7.0, 2.0, 100.0],
        tolerances: vec![1e-2, 1e-3, 1e-4],
        n: 500,
        d: 4,
        seed: 42,
        ..Default::default()
    };
    let table = timing_ablation(&config).unwrap();
    for row in &table.cells {
        for c in row {
            println!(
                "p={:8.4} tol={:.0e}: ip {:8.4}s (conv {}), fw {:8.4}s (conv {}), ratio {:?}",
                c.p, c.tolerance, c.ip_seconds, c.ip_converged, c.fw_seconds, c.fw_converged, c.ratio
            );
        }
    }
}
