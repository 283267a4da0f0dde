use locfuse::experiment::*;
use locfuse::fusion::*;
use locfuse::evaluation::auc_roc;
use locfuse::scorespace::*;
use nalgebra::DMatrix;
use std::path::Path;

fn main() {
    let schema = DatasetSchema::from_path(Path::new("data/vote.schema.json")).unwrap();
    let ds = load_dataset(Path::new("data/vote.csv"), &schema).unwrap();
    let plan = make_splits(&ds, SplitMode::Pure, 42).unwrap();

    // replicate the harness prep by hand
    let gather = |idx: &[usize]| {
        let x = DMatrix::from_fn(idx.len(), ds.features.ncols(), |r, c| ds.features[(idx[r], c)]);
        let y: Vec<i8> = idx.iter().map(|&i| ds.labels[i]).collect();
        (x, y)
    };
    let (x_train_raw, y_train) = gather(&plan.train);
    let (x_test_raw, y_test) = gather(&plan.test);
    let scaler = locfuse::features::FeatureScaler::fit(&x_train_raw).unwrap();
    let x_train = scaler.apply(&x_train_raw).unwrap();
    let x_test = scaler.apply(&x_test_raw).unwrap();

    // locality structure
    let index = LocalityIndex::fit(&x_train, 10).unwrap();
    let n = x_train.nrows();
    let mut disp: Vec<f64> = (0..n).map(|i| index.dispersion(i)).collect();
    disp.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("n_train={n} dispersion: min={:.4} med={:.4} max={:.4}, zeros={}",
        disp[0], index.median_dispersion(), disp[n-1],
        disp.iter().filter(|&&d| d == 0.0).count());
    for p_base in [2.0, 100.0] {
        let ps: Vec<f64> = (0..n).map(|i| index.exponent_for_row(i, p_base)).collect();
        let mut s = ps.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("p_base={p_base}: local p min={:.3} med={:.3} max={:.3}", s[0], s[n/2], s[n-1]);
    }

    // scores via one combo (mult=0.5, kpca=10, gmm=1) like the winning cells
    let m = locfuse::kernels::mean_squared_distance(&x_train).unwrap();
    let kernel = locfuse::kernels::KernelSpec::from_grid(0.5, m).unwrap();
    let specs = vec![
        locfuse::learners::BaseLearnerSpec::Svdd { kernel },
        locfuse::learners::BaseLearnerSpec::Ocgp { kernel },
        locfuse::learners::BaseLearnerSpec::Kpca { kernel, subspace_dim: 10 },
        locfuse::learners::BaseLearnerSpec::Gmm { components: 1 },
    ];
    let ids: Vec<String> = vec!["svdd".into(), "ocgp".into(), "kpca".into(), "gmm".into()];
    let models: Vec<_> = specs.iter().map(|sp| locfuse::learners::fit_base_learner(sp, &x_train, 42).unwrap()).collect();
    let score_of = |x: &DMatrix<f64>| {
        let mut mcols = DMatrix::zeros(x.nrows(), 4);
        for (j, mo) in models.iter().enumerate() {
            mcols.set_column(j, &mo.score_samples(x).unwrap());
        }
        ScoreMatrix::raw(mcols, ids.clone()).unwrap()
    };
    let raw_train = score_of(&x_train);
    let raw_test = score_of(&x_test);
    let mut norm = fit_zscore(&raw_train).unwrap();
    let z_train = apply_zscore(&norm, &raw_train).unwrap();
    let z_test = apply_zscore(&norm, &raw_test).unwrap();
    fit_trim_quantiles(&mut norm, &z_train, 4).unwrap();
    let n_train = trimmed_minmax(&norm, &z_train).unwrap();
    let n_test = trimmed_minmax(&norm, &z_test).unwrap();

    // per-column AUC and sum AUC
    for j in 0..4 {
        let col: Vec<f64> = n_test.values().column(j).iter().copied().collect();
        println!("learner {} test AUC {:.4}", ids[j], auc_roc(&col, &y_test).unwrap());
    }
    let sums: Vec<f64> = (0..n_test.nrows()).map(|i| n_test.values().row(i).sum()).collect();
    println!("sum rule test AUC {:.4}", auc_roc(&sums, &y_test).unwrap());

    // IP fused at each p
    for &p in &[32.0/31.0, 2.0, 8.0, 100.0] {
        for locality in [true, false] {
            let config = OptimizerConfig {
                p_base: p, locality_enabled: locality, locality_k: 10,
                max_epochs: 200, tolerance: 1e-3 * n as f64,
                ..Default::default()
            };
            let (set, _) = optimize_interior_point(&n_train, &x_train, &y_train, &config).unwrap();
            let fused = fuse_scores(&set, &n_test, &x_test).unwrap();
            let f: Vec<f64> = fused.iter().copied().collect();
            println!("p={p:8.4} locality={locality}: fused test AUC {:.4}", auc_roc(&f, &y_test).unwrap());
        }
    }
}
