//! Repeated seeded trials: split, fit base learners, normalize scores, tune
//! hyperparameters on validation data, pick a threshold, and score the test
//! slice. Trial t uses seed base_seed + t; trials run in parallel and
//! aggregation is order-independent.
//!
//! Score pipeline per learner-side combination: raw scores -> z-score
//! (statistics fitted on train+validation) -> trimmed min-max at the
//! searched rho -> fusion. Thresholds and metrics are computed on raw fused
//! scores; percentile thresholds, G-mean scans, and AUC are invariant under
//! affine rescaling, so no second normalization stage is needed.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    auc_pr, auc_roc, g_mean, select_threshold, EvalReport, ThresholdChoice, ThresholdStrategy,
    TrialMetrics,
};
use crate::experiment::dataset::Dataset;
use crate::experiment::grid::{GridPoint, GridSelection, HyperGrid, TuningCriterion};
use crate::experiment::splits::{make_splits, SplitMode, SplitPlan};
use crate::features::FeatureScaler;
use crate::fusion::{
    optimize_frank_wolfe, optimize_interior_point, weight_set_from_global, FusionMode,
    FusionModel, LocalWeightSet, OptimizerConfig,
};
use crate::kernels::{mean_squared_distance, KernelSpec};
use crate::learners::{fit_base_learner, BaseLearnerModel, BaseLearnerSpec, LearnerKind};
use crate::scorespace::{
    apply_zscore, fit_trim_quantiles, fit_zscore, generate_pseudo_negatives, trimmed_minmax,
    NormalizerState, ScoreMatrix,
};

/// Methods reported in the comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    InteriorPoint,
    FrankWolfe,
    SumRule,
    SingleBest,
    Svdd,
    Ocgp,
    Kpca,
    Gmm,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::InteriorPoint,
        Method::FrankWolfe,
        Method::SumRule,
        Method::SingleBest,
        Method::Svdd,
        Method::Ocgp,
        Method::Kpca,
        Method::Gmm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::InteriorPoint => "interior-point",
            Method::FrankWolfe => "frank-wolfe",
            Method::SumRule => "sum-rule",
            Method::SingleBest => "single-best",
            Method::Svdd => "svdd",
            Method::Ocgp => "ocgp",
            Method::Kpca => "kpca",
            Method::Gmm => "gmm",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.label() == s)
    }

    fn optimizes_weights(&self) -> bool {
        matches!(self, Method::InteriorPoint | Method::FrankWolfe)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: FusionMode,
    pub methods: Vec<Method>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub grid: HyperGrid,
    pub locality_k: usize,
    pub learning_rate: f64,
    pub ip_max_epochs: usize,
    pub fw_max_iters: usize,
    pub tolerance: f64,
    pub pseudo_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: FusionMode::PureRpau,
            methods: Method::ALL.to_vec(),
            n_trials: 10,
            base_seed: 42,
            grid: HyperGrid::default(),
            locality_k: 10,
            learning_rate: 0.01,
            ip_max_epochs: 200,
            fw_max_iters: 2000,
            tolerance: 1e-3,
            pseudo_fraction: 0.5,
        }
    }
}

impl RunConfig {
    pub fn split_mode(&self) -> SplitMode {
        match self.mode {
            FusionMode::NonPure => SplitMode::NonPure,
            _ => SplitMode::Pure,
        }
    }

    pub fn criterion(&self) -> TuningCriterion {
        match self.mode {
            FusionMode::PureRpau => TuningCriterion::Rpau,
            FusionMode::PurePseudoNeg => TuningCriterion::PseudoNegGmean,
            FusionMode::NonPure => TuningCriterion::NonPureValAuc,
        }
    }
}

/// One method's outcome in one trial; the deterministic results file holds
/// exactly these records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dataset: String,
    pub mode: String,
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub p_base: Option<f64>,
    pub rho: u32,
    pub width_multiplier: f64,
    pub kpca_dim: usize,
    pub gmm_components: usize,
    pub chosen_learner: Option<String>,
    /// For weight-optimizing methods: whether the winning candidate used
    /// per-sample locality (interior point searches both settings).
    pub locality: Option<bool>,
    pub criterion_value: f64,
    pub threshold: f64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub g_mean: f64,
}

/// Wall-clock phase timings of one trial (not part of the deterministic
/// results file).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub trial: usize,
    pub seed: u64,
    pub split_secs: f64,
    pub fit_secs: f64,
    pub tune_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dataset: String,
    pub mode: FusionMode,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<MethodSummary>,
    pub timings: Vec<PhaseTiming>,
    pub failed_trials: Vec<(usize, String)>,
}

impl RunOutcome {
    /// One JSON record per line, sorted by (trial, method) for byte-stable
    /// output.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Mean±std% table in the comparison-table layout: method columns, an
    /// AUC row and a G-mean row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = 16;
        out.push_str(&format!("{:<14}", "dataset"));
        for s in &self.summaries {
            out.push_str(&format!("{:>width$}", s.method.label(), width = width));
        }
        out.push('\n');
        out.push_str(&format!("{:<14}", self.dataset));
        for s in &self.summaries {
            let cell = format!(
                "{:.2}±{:.2}",
                100.0 * s.report.auc_roc.mean,
                100.0 * s.report.auc_roc.std
            );
            out.push_str(&format!("{cell:>width$}", width = width));
        }
        out.push_str("  (AUC-ROC %)\n");
        out.push_str(&format!("{:<14}", ""));
        for s in &self.summaries {
            let cell = format!(
                "{:.2}±{:.2}",
                100.0 * s.report.g_mean.mean,
                100.0 * s.report.g_mean.std
            );
            out.push_str(&format!("{cell:>width$}", width = width));
        }
        out.push_str("  (G-mean %)\n");
        out
    }

    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Split-aligned, feature-scaled views of one trial.
struct TrialData {
    x_train: DMatrix<f64>,
    x_val: DMatrix<f64>,
    x_test: DMatrix<f64>,
    y_train: Vec<i8>,
    y_val: Vec<i8>,
    y_test: Vec<i8>,
    scaler: FeatureScaler,
    /// Nearest-training-anchor tie sets per row, shared by every grid cell.
    nn_val: Vec<Vec<usize>>,
    nn_test: Vec<Vec<usize>>,
}

fn gather(features: &DMatrix<f64>, labels: &[i8], idx: &[usize]) -> (DMatrix<f64>, Vec<i8>) {
    let x = DMatrix::from_fn(idx.len(), features.ncols(), |r, c| features[(idx[r], c)]);
    let y = idx.iter().map(|&i| labels[i]).collect();
    (x, y)
}

/// Anchor rows at exactly the minimal distance per query row; tied rows are
/// averaged at fuse time (matters on discrete feature spaces).
fn nearest_indices(anchors: &DMatrix<f64>, x: &DMatrix<f64>) -> Vec<Vec<usize>> {
    (0..x.nrows())
        .map(|i| {
            let mut best = Vec::new();
            let mut best_d2 = f64::INFINITY;
            for a in 0..anchors.nrows() {
                let mut d2 = 0.0;
                for c in 0..anchors.ncols() {
                    let diff = anchors[(a, c)] - x[(i, c)];
                    d2 += diff * diff;
                }
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = vec![a];
                } else if d2 == best_d2 {
                    best.push(a);
                }
            }
            best
        })
        .collect()
}

fn prepare_trial(dataset: &Dataset, plan: &SplitPlan) -> Result<TrialData> {
    let (x_train_raw, y_train) = gather(&dataset.features, &dataset.labels, &plan.train);
    let (x_val_raw, y_val) = gather(&dataset.features, &dataset.labels, &plan.validation);
    let (x_test_raw, y_test) = gather(&dataset.features, &dataset.labels, &plan.test);
    let scaler = FeatureScaler::fit(&x_train_raw)?;
    let x_train = scaler.apply(&x_train_raw)?;
    let x_val = scaler.apply(&x_val_raw)?;
    let x_test = scaler.apply(&x_test_raw)?;
    let nn_val = nearest_indices(&x_train, &x_val);
    let nn_test = nearest_indices(&x_train, &x_test);
    Ok(TrialData {
        x_train,
        x_val,
        x_test,
        y_train,
        y_val,
        y_test,
        scaler,
        nn_val,
        nn_test,
    })
}

/// Fitted learners and z-scored matrices for one learner-side combination;
/// z statistics come from train+validation scores.
struct ComboScores {
    mult_idx: usize,
    kpca_idx: usize,
    gmm_idx: usize,
    width_multiplier: f64,
    kpca_dim: usize,
    gmm_components: usize,
    learners: Vec<BaseLearnerModel>,
    z_normalizer: NormalizerState,
    z_trainval: ScoreMatrix,
    z_train: ScoreMatrix,
    z_val: ScoreMatrix,
    z_test: ScoreMatrix,
}

const LEARNER_ORDER: [LearnerKind; 4] = [
    LearnerKind::Svdd,
    LearnerKind::Ocgp,
    LearnerKind::Kpca,
    LearnerKind::Gmm,
];

fn learner_ids() -> Vec<String> {
    LEARNER_ORDER.iter().map(|k| k.label().to_string()).collect()
}

fn column_index(kind: LearnerKind) -> usize {
    LEARNER_ORDER.iter().position(|&k| k == kind).unwrap()
}

/// Fit every learner-side combination, factoring shared work: SVDD/OC-GP per
/// multiplier, one KPCA eigendecomposition per multiplier truncated per
/// dimension, GMM per component count.
fn build_combos(data: &TrialData, grid: &HyperGrid, seed: u64) -> Result<Vec<ComboScores>> {
    let m_dist = mean_squared_distance(&data.x_train)?;
    let sets = [&data.x_train, &data.x_val, &data.x_test];

    struct Scored {
        model: BaseLearnerModel,
        scores: [DVector<f64>; 3],
    }
    let score_all = |model: BaseLearnerModel| -> Result<Scored> {
        let scores = [
            model.score_samples(sets[0])?,
            model.score_samples(sets[1])?,
            model.score_samples(sets[2])?,
        ];
        Ok(Scored { model, scores })
    };

    let mut svdd: Vec<Scored> = Vec::new();
    let mut ocgp: Vec<Scored> = Vec::new();
    let mut kpca: Vec<Vec<Scored>> = Vec::new(); // [mult][dim]
    for &mult in &grid.width_multipliers {
        let kernel = KernelSpec::from_grid(mult, m_dist)?;
        svdd.push(score_all(fit_base_learner(
            &BaseLearnerSpec::Svdd { kernel },
            &data.x_train,
            seed,
        )?)?);
        ocgp.push(score_all(fit_base_learner(
            &BaseLearnerSpec::Ocgp { kernel },
            &data.x_train,
            seed,
        )?)?);
        let max_dim = *grid.kpca_dims.iter().max().unwrap();
        let full = match fit_base_learner(
            &BaseLearnerSpec::Kpca {
                kernel,
                subspace_dim: max_dim.min(data.x_train.nrows()),
            },
            &data.x_train,
            seed,
        )? {
            BaseLearnerModel::Kpca(m) => m,
            _ => unreachable!(),
        };
        let mut per_dim = Vec::new();
        for &dim in &grid.kpca_dims {
            per_dim.push(score_all(BaseLearnerModel::Kpca(full.truncated(dim)))?);
        }
        kpca.push(per_dim);
    }
    let mut gmm: Vec<Scored> = Vec::new();
    for &k in &grid.gmm_components {
        gmm.push(score_all(fit_base_learner(
            &BaseLearnerSpec::Gmm { components: k },
            &data.x_train,
            seed,
        )?)?);
    }

    let ids = learner_ids();
    let n_train = data.x_train.nrows();
    let n_val = data.x_val.nrows();
    let mut combos = Vec::new();
    for (mi, &mult) in grid.width_multipliers.iter().enumerate() {
        for (ki, &dim) in grid.kpca_dims.iter().enumerate() {
            for (gi, &k) in grid.gmm_components.iter().enumerate() {
                let parts = [&svdd[mi], &ocgp[mi], &kpca[mi][ki], &gmm[gi]];
                let mut mats: Vec<ScoreMatrix> = Vec::with_capacity(3);
                for (set_idx, set) in sets.iter().enumerate() {
                    let mut m = DMatrix::zeros(set.nrows(), 4);
                    for (j, part) in parts.iter().enumerate() {
                        m.set_column(j, &part.scores[set_idx]);
                    }
                    mats.push(ScoreMatrix::raw(m, ids.clone())?);
                }
                // z statistics over train+validation scores
                let mut stacked = DMatrix::zeros(n_train + n_val, 4);
                stacked
                    .view_mut((0, 0), (n_train, 4))
                    .copy_from(mats[0].values());
                stacked
                    .view_mut((n_train, 0), (n_val, 4))
                    .copy_from(mats[1].values());
                let raw_trainval = ScoreMatrix::raw(stacked, ids.clone())?;
                let z_normalizer = fit_zscore(&raw_trainval)?;
                let z_trainval = apply_zscore(&z_normalizer, &raw_trainval)?;
                let z_train = apply_zscore(&z_normalizer, &mats[0])?;
                let z_val = apply_zscore(&z_normalizer, &mats[1])?;
                let z_test = apply_zscore(&z_normalizer, &mats[2])?;
                combos.push(ComboScores {
                    mult_idx: mi,
                    kpca_idx: ki,
                    gmm_idx: gi,
                    width_multiplier: mult,
                    kpca_dim: dim,
                    gmm_components: k,
                    learners: parts.iter().map(|p| p.model.clone()).collect(),
                    z_normalizer,
                    z_trainval,
                    z_train,
                    z_val,
                    z_test,
                });
            }
        }
    }
    Ok(combos)
}

/// Dot each row of the score matrix with its anchor's weight row (averaged
/// over exact-distance ties), or with the shared vector.
fn fused_with(weights: &LocalWeightSet, s: &ScoreMatrix, nn: &[Vec<usize>]) -> DVector<f64> {
    if weights.is_shared() {
        let w = weights.weight_row(0);
        DVector::from_fn(s.nrows(), |i, _| s.row(i).dot(&w))
    } else {
        DVector::from_fn(s.nrows(), |i, _| {
            let row = s.row(i);
            let acc: f64 = nn[i]
                .iter()
                .map(|&a| row.dot(&weights.weight_row(a)))
                .sum();
            acc / nn[i].len() as f64
        })
    }
}

/// Trim-normalized score matrices for one (combo, rho) cell, plus the
/// pseudo-negative material when the criterion needs it.
struct TrimmedSet {
    normalizer: NormalizerState,
    n_train: ScoreMatrix,
    n_val: ScoreMatrix,
    n_test: ScoreMatrix,
    n_aug: Option<ScoreMatrix>,
    aug_labels: Option<Vec<i8>>,
    nn_aug: Option<Vec<Vec<usize>>>,
}

fn trim_combo(
    combo: &ComboScores,
    rho: u32,
    data: &TrialData,
    pseudo: Option<&(ScoreMatrix, Vec<i8>, Vec<usize>)>,
) -> Result<TrimmedSet> {
    let mut normalizer = combo.z_normalizer.clone();
    fit_trim_quantiles(&mut normalizer, &combo.z_trainval, rho)?;
    let n_train = trimmed_minmax(&normalizer, &combo.z_train)?;
    let n_val = trimmed_minmax(&normalizer, &combo.z_val)?;
    let n_test = trimmed_minmax(&normalizer, &combo.z_test)?;
    let (n_aug, aug_labels, nn_aug) = match pseudo {
        Some((z_aug, labels, sources)) => {
            let n_aug = trimmed_minmax(&normalizer, z_aug)?;
            let mut nn = data.nn_val.clone();
            for &s in sources {
                nn.push(data.nn_val[s].clone());
            }
            (Some(n_aug), Some(labels.clone()), Some(nn))
        }
        None => (None, None, None),
    };
    Ok(TrimmedSet {
        normalizer,
        n_train,
        n_val,
        n_test,
        n_aug,
        aug_labels,
        nn_aug,
    })
}

struct CellScore {
    criterion_value: f64,
    threshold: ThresholdChoice,
    metrics: TrialMetrics,
}

/// Criterion value, mode threshold, and test metrics for one fused score set.
fn evaluate_cell(
    val: &[f64],
    test: &[f64],
    aug: Option<(&[f64], &[i8])>,
    rho: u32,
    data: &TrialData,
    criterion: TuningCriterion,
) -> Result<CellScore> {
    let (criterion_value, threshold) = match criterion {
        TuningCriterion::Rpau => {
            let choice = select_threshold(val, None, ThresholdStrategy::Rpau { rho })?;
            (choice.criterion_value, choice)
        }
        TuningCriterion::PseudoNegGmean => {
            let (aug_scores, aug_labels) = aug.expect("pseudo-negative material prepared");
            let choice =
                select_threshold(aug_scores, Some(aug_labels), ThresholdStrategy::PseudoNegGmean)?;
            (choice.criterion_value, choice)
        }
        TuningCriterion::NonPureValAuc => {
            let auc = auc_roc(val, &data.y_val)?;
            let choice =
                select_threshold(val, Some(&data.y_val), ThresholdStrategy::PseudoNegGmean)?;
            (auc, choice)
        }
    };

    let metrics = TrialMetrics {
        auc_roc: auc_roc(test, &data.y_test)?,
        auc_pr: auc_pr(test, &data.y_test)?,
        g_mean: g_mean(test, &data.y_test, threshold.threshold)?,
        threshold: threshold.threshold,
    };
    Ok(CellScore {
        criterion_value,
        threshold,
        metrics,
    })
}

struct BestCell {
    point: GridPoint,
    chosen_learner: Option<String>,
    score: CellScore,
    weights: LocalWeightSet,
    combo_index: usize,
    /// Normalizer (z + trim at the winning rho) for model assembly.
    normalizer: NormalizerState,
}

/// Candidate weight sets for one method on one trimmed cell.
fn cell_candidates(
    method: Method,
    trimmed: &TrimmedSet,
    data: &TrialData,
    config: &RunConfig,
) -> Result<Vec<(Option<usize>, Option<f64>, LocalWeightSet, Option<String>)>> {
    let d = trimmed.n_train.ncols();
    Ok(match method {
        Method::InteriorPoint => {
            let mut out = Vec::new();
            for (pi, &p) in config.grid.p_values.iter().enumerate() {
                // the optimizer tolerance is an absolute objective change;
                // the configured value is per-sample, so scale by n
                let opt = OptimizerConfig {
                    p_base: p,
                    locality_k: config.locality_k.min(data.x_train.nrows() - 1).max(1),
                    locality_enabled: true,
                    learning_rate: config.learning_rate,
                    max_epochs: config.ip_max_epochs,
                    tolerance: config.tolerance * data.x_train.nrows() as f64,
                    ..Default::default()
                };
                let (w, _) =
                    optimize_interior_point(&trimmed.n_train, &data.x_train, &data.y_train, &opt)?;
                out.push((Some(pi), Some(p), w, None));
            }
            out
        }
        Method::FrankWolfe => {
            let mut out = Vec::new();
            for (pi, &p) in config.grid.p_values.iter().enumerate() {
                let opt = OptimizerConfig {
                    p_base: p,
                    locality_enabled: false,
                    max_epochs: config.fw_max_iters,
                    tolerance: config.tolerance * data.x_train.nrows() as f64,
                    ..Default::default()
                };
                let (w, _) = optimize_frank_wolfe(&trimmed.n_train, &data.y_train, p, &opt)?;
                out.push((
                    Some(pi),
                    Some(p),
                    weight_set_from_global(&w, p, &data.x_train),
                    None,
                ));
            }
            out
        }
        Method::SumRule => {
            // uniform direction at unit norm: thresholds and metrics are
            // scale-invariant, so this reproduces row sums exactly
            let uniform = DVector::from_element(d, 1.0 / (d as f64).sqrt());
            vec![(
                None,
                None,
                weight_set_from_global(&uniform, 2.0, &data.x_train),
                None,
            )]
        }
        Method::SingleBest => (0..d)
            .map(|j| {
                let mut w = DVector::zeros(d);
                w[j] = 1.0;
                (
                    None,
                    None,
                    weight_set_from_global(&w, 2.0, &data.x_train),
                    Some(learner_ids()[j].clone()),
                )
            })
            .collect(),
        Method::Svdd | Method::Ocgp | Method::Kpca | Method::Gmm => {
            let kind = match method {
                Method::Svdd => LearnerKind::Svdd,
                Method::Ocgp => LearnerKind::Ocgp,
                Method::Kpca => LearnerKind::Kpca,
                _ => LearnerKind::Gmm,
            };
            let j = column_index(kind);
            let mut w = DVector::zeros(d);
            w[j] = 1.0;
            vec![(
                None,
                None,
                weight_set_from_global(&w, 2.0, &data.x_train),
                None,
            )]
        }
    })
}

/// Exhaustive scan of the method's grid; ties resolve to the
/// lexicographically-first grid tuple.
fn tune_method(
    method: Method,
    combos: &[ComboScores],
    data: &TrialData,
    config: &RunConfig,
    seed: u64,
) -> Result<BestCell> {
    type Payload = (
        CellScore,
        Option<String>,
        LocalWeightSet,
        usize,
        NormalizerState,
    );
    let mut selection: GridSelection<Payload> = GridSelection::new();
    let needs_pseudo = config.criterion() == TuningCriterion::PseudoNegGmean;

    for (ci, combo) in combos.iter().enumerate() {
        // pseudo-negatives are drawn once per combo in z-space; each rho's
        // trim maps them alongside the real rows
        let pseudo = if needs_pseudo {
            Some(generate_pseudo_negatives(
                &combo.z_val,
                config.pseudo_fraction,
                seed,
            )?)
        } else {
            None
        };

        for (ri, &rho) in config.grid.rhos.iter().enumerate() {
            let trimmed = trim_combo(combo, rho, data, pseudo.as_ref())?;
            let candidates = cell_candidates(method, &trimmed, data, config)?;
            for (cand_idx, (pi, p, weights, learner)) in candidates.iter().enumerate() {
                let val = fused_with(weights, &trimmed.n_val, &data.nn_val);
                let test = fused_with(weights, &trimmed.n_test, &data.nn_test);
                let aug_fused = trimmed
                    .n_aug
                    .as_ref()
                    .map(|n| fused_with(weights, n, trimmed.nn_aug.as_ref().unwrap()));
                let val_slice: Vec<f64> = val.iter().copied().collect();
                let test_slice: Vec<f64> = test.iter().copied().collect();
                let aug_pair = aug_fused
                    .as_ref()
                    .map(|f| (f.as_slice(), trimmed.aug_labels.as_deref().unwrap()));
                let cell = evaluate_cell(
                    &val_slice,
                    &test_slice,
                    aug_pair,
                    rho,
                    data,
                    config.criterion(),
                )?;
                let point = GridPoint {
                    p_base: *p,
                    rho,
                    width_multiplier: combo.width_multiplier,
                    kpca_dim: combo.kpca_dim,
                    gmm_components: combo.gmm_components,
                    order: (
                        pi.unwrap_or(0),
                        ri,
                        combo.mult_idx,
                        combo.kpca_idx,
                        combo.gmm_idx,
                        cand_idx,
                    ),
                };
                selection.offer(
                    cell.criterion_value,
                    point,
                    (
                        cell,
                        learner.clone(),
                        weights.clone(),
                        ci,
                        trimmed.normalizer.clone(),
                    ),
                );
            }
        }
    }

    let (_, point, (score, chosen_learner, weights, combo_index, normalizer)) = selection
        .into_best()
        .ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
    Ok(BestCell {
        point,
        chosen_learner,
        score,
        weights,
        combo_index,
        normalizer,
    })
}

fn run_one_trial(
    dataset: &Dataset,
    config: &RunConfig,
    trial: usize,
) -> Result<(Vec<TrialRecord>, PhaseTiming)> {
    let seed = config.base_seed + trial as u64;

    let t0 = Instant::now();
    let plan = make_splits(dataset, config.split_mode(), seed)?;
    let data = prepare_trial(dataset, &plan)?;
    let split_secs = t0.elapsed().as_secs_f64().max(1e-9);

    let t1 = Instant::now();
    let grid = config.grid.clamped_for(data.x_train.nrows());
    let trial_config = RunConfig {
        grid,
        ..config.clone()
    };
    let combos = build_combos(&data, &trial_config.grid, seed)?;
    let fit_secs = t1.elapsed().as_secs_f64().max(1e-9);

    let t2 = Instant::now();
    let mut records = Vec::new();
    for &method in &trial_config.methods {
        let best = tune_method(method, &combos, &data, &trial_config, seed)?;
        records.push(TrialRecord {
            dataset: dataset.name.clone(),
            mode: config.mode.label().to_string(),
            method: method.label().to_string(),
            trial,
            seed,
            p_base: best.point.p_base,
            rho: best.point.rho,
            width_multiplier: best.point.width_multiplier,
            kpca_dim: best.point.kpca_dim,
            gmm_components: best.point.gmm_components,
            chosen_learner: best.chosen_learner.clone(),
            locality: if method.optimizes_weights() {
                Some(!best.weights.is_shared())
            } else {
                None
            },
            criterion_value: best.score.criterion_value,
            threshold: best.score.threshold.threshold,
            auc_roc: best.score.metrics.auc_roc,
            auc_pr: best.score.metrics.auc_pr,
            g_mean: best.score.metrics.g_mean,
        });
    }
    let tune_secs = t2.elapsed().as_secs_f64().max(1e-9);

    Ok((
        records,
        PhaseTiming {
            trial,
            seed,
            split_secs,
            fit_secs,
            tune_secs,
        },
    ))
}

/// Run the full protocol: n_trials seeded trials over every requested
/// method, in parallel, with order-independent aggregation.
pub fn run_trials(dataset: &Dataset, config: &RunConfig) -> Result<RunOutcome> {
    if config.n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be at least 1".into()));
    }
    config.grid.validate()?;
    if config.methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }

    let results: Vec<std::result::Result<(Vec<TrialRecord>, PhaseTiming), String>> = (0..config
        .n_trials)
        .into_par_iter()
        .map(|t| run_one_trial(dataset, config, t).map_err(|e| e.to_string()))
        .collect();

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut failed = Vec::new();
    for (t, result) in results.into_iter().enumerate() {
        match result {
            Ok((recs, timing)) => {
                records.extend(recs);
                timings.push(timing);
            }
            Err(message) => failed.push((t, message)),
        }
    }
    if failed.len() * 2 > config.n_trials {
        return Err(Error::RunFailed(format!(
            "{} of {} trials failed; first: {}",
            failed.len(),
            config.n_trials,
            failed
                .first()
                .map(|(t, m)| format!("trial {t}: {m}"))
                .unwrap_or_default()
        )));
    }

    // order-independent aggregation: sort records by (trial, method)
    records.sort_by(|a, b| (a.trial, &a.method).cmp(&(b.trial, &b.method)));
    timings.sort_by_key(|t| t.trial);

    let mut summaries = Vec::new();
    for &method in &config.methods {
        let per_trial: Vec<TrialMetrics> = records
            .iter()
            .filter(|r| r.method == method.label())
            .map(|r| TrialMetrics {
                auc_roc: r.auc_roc,
                auc_pr: r.auc_pr,
                g_mean: r.g_mean,
                threshold: r.threshold,
            })
            .collect();
        if per_trial.is_empty() {
            continue;
        }
        summaries.push(MethodSummary {
            method,
            report: EvalReport::from_trials(per_trial)?,
        });
    }

    Ok(RunOutcome {
        dataset: dataset.name.clone(),
        mode: config.mode,
        records,
        summaries,
        timings,
        failed_trials: failed,
    })
}

/// Train one deployable fusion model on a single seeded split, tuning with
/// the same grid machinery.
pub fn fit_model(
    dataset: &Dataset,
    config: &RunConfig,
    optimizer: Method,
    seed: u64,
) -> Result<(FusionModel, TrialRecord)> {
    if !optimizer.optimizes_weights() {
        return Err(Error::InvalidInput(
            "model fitting needs a weight-optimizing method".into(),
        ));
    }
    config.grid.validate()?;
    let plan = make_splits(dataset, config.split_mode(), seed)?;
    let data = prepare_trial(dataset, &plan)?;
    let grid = config.grid.clamped_for(data.x_train.nrows());
    let trial_config = RunConfig {
        grid,
        ..config.clone()
    };
    let combos = build_combos(&data, &trial_config.grid, seed)?;
    let best = tune_method(optimizer, &combos, &data, &trial_config, seed)?;

    let combo = &combos[best.combo_index];
    let opt_config = OptimizerConfig {
        p_base: best.point.p_base.unwrap_or(2.0),
        locality_k: trial_config.locality_k.min(data.x_train.nrows() - 1).max(1),
        locality_enabled: !best.weights.is_shared(),
        learning_rate: trial_config.learning_rate,
        max_epochs: trial_config.ip_max_epochs,
        tolerance: trial_config.tolerance,
        ..Default::default()
    };
    let model = FusionModel::new(
        learner_ids(),
        combo.learners.clone(),
        Some(data.scaler.clone()),
        best.normalizer.clone(),
        best.weights.clone(),
        best.score.threshold.threshold,
        config.mode,
        opt_config,
    )?;

    let record = TrialRecord {
        dataset: dataset.name.clone(),
        mode: config.mode.label().to_string(),
        method: optimizer.label().to_string(),
        trial: 0,
        seed,
        p_base: best.point.p_base,
        rho: best.point.rho,
        width_multiplier: best.point.width_multiplier,
        kpca_dim: best.point.kpca_dim,
        gmm_components: best.point.gmm_components,
        chosen_learner: best.chosen_learner,
        locality: Some(!best.weights.is_shared()),
        criterion_value: best.score.criterion_value,
        threshold: best.score.threshold.threshold,
        auc_roc: best.score.metrics.auc_roc,
        auc_pr: best.score.metrics.auc_pr,
        g_mean: best.score.metrics.g_mean,
    };
    Ok((model, record))
}

/// Evaluate a saved model against a labeled dataset.
pub fn evaluate_model(model: &FusionModel, dataset: &Dataset) -> Result<TrialMetrics> {
    let scores = model.score_features(&dataset.features)?;
    let s: Vec<f64> = scores.iter().copied().collect();
    Ok(TrialMetrics {
        auc_roc: auc_roc(&s, &dataset.labels)?,
        auc_pr: auc_pr(&s, &dataset.labels)?,
        g_mean: g_mean(&s, &dataset.labels, model.threshold())?,
        threshold: model.threshold(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Two separated Gaussian blobs: normals near the origin, anomalies far.
    pub(super) fn synthetic_dataset(n_normal: usize, n_anom: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || {
            let u1: f64 = rng.random_range(1e-9..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (-2.0 * u1.ln()).sqrt() * u2.cos()
        };
        let n = n_normal + n_anom;
        let mut rows = Vec::with_capacity(n * 2);
        for _ in 0..n_normal {
            rows.push(normal());
            rows.push(normal());
        }
        for _ in 0..n_anom {
            rows.push(6.0 + 0.5 * normal());
            rows.push(6.0 + 0.5 * normal());
        }
        Dataset {
            name: "blobs".into(),
            features: DMatrix::from_row_slice(n, 2, &rows),
            labels: (0..n).map(|i| if i < n_normal { 1 } else { -1 }).collect(),
            rejected_rows: 0,
            provenance: String::new(),
        }
    }

    fn small_config(mode: FusionMode, methods: Vec<Method>) -> RunConfig {
        RunConfig {
            mode,
            methods,
            n_trials: 2,
            base_seed: 7,
            grid: HyperGrid {
                p_values: vec![2.0, 100.0],
                rhos: vec![5],
                width_multipliers: vec![1.0],
                kpca_dims: vec![2],
                gmm_components: vec![1],
            },
            locality_k: 5,
            ..Default::default()
        }
    }

    #[test]
    fn pipeline_separates_blobs_pure_rpau() {
        let ds = synthetic_dataset(60, 12, 3);
        let config = small_config(
            FusionMode::PureRpau,
            vec![Method::InteriorPoint, Method::SumRule],
        );
        let outcome = run_trials(&ds, &config).unwrap();
        assert!(outcome.failed_trials.is_empty());
        let ip = outcome.summary_for(Method::InteriorPoint).unwrap();
        assert!(
            ip.report.auc_roc.mean > 0.95,
            "fused AUC too low: {}",
            ip.report.auc_roc.mean
        );
        assert!(
            ip.report.g_mean.mean > 0.8,
            "fused G-mean too low: {}",
            ip.report.g_mean.mean
        );
        let table = outcome.render_table();
        assert!(table.contains("interior-point"));
        assert!(table.contains("AUC-ROC"));
    }

    #[test]
    fn pipeline_runs_pseudoneg_and_nonpure() {
        let ds = synthetic_dataset(50, 20, 11);
        for mode in [FusionMode::PurePseudoNeg, FusionMode::NonPure] {
            let config = small_config(mode, vec![Method::FrankWolfe]);
            let outcome = run_trials(&ds, &config).unwrap();
            assert!(outcome.failed_trials.is_empty(), "{mode:?}");
            let fw = outcome.summary_for(Method::FrankWolfe).unwrap();
            assert!(
                fw.report.auc_roc.mean > 0.9,
                "{mode:?}: AUC {}",
                fw.report.auc_roc.mean
            );
        }
    }

    #[test]
    fn records_are_deterministic_across_runs() {
        let ds = synthetic_dataset(40, 10, 5);
        let config = small_config(FusionMode::PureRpau, vec![Method::InteriorPoint]);
        let a = run_trials(&ds, &config).unwrap();
        let b = run_trials(&ds, &config).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn aggregates_match_recomputation_from_records() {
        let ds = synthetic_dataset(40, 10, 9);
        let config = small_config(FusionMode::PureRpau, vec![Method::SumRule]);
        let outcome = run_trials(&ds, &config).unwrap();
        let values: Vec<f64> = outcome
            .records
            .iter()
            .filter(|r| r.method == "sum-rule")
            .map(|r| r.auc_roc)
            .collect();
        let direct = crate::evaluation::summarize(&values);
        let summary = outcome.summary_for(Method::SumRule).unwrap();
        assert_eq!(summary.report.auc_roc.mean.to_bits(), direct.mean.to_bits());
        assert_eq!(summary.report.auc_roc.std.to_bits(), direct.std.to_bits());
    }

    #[test]
    fn fit_model_roundtrips_and_scores() {
        let ds = synthetic_dataset(50, 10, 13);
        let config = small_config(FusionMode::PureRpau, vec![Method::InteriorPoint]);
        let (model, record) = fit_model(&ds, &config, Method::InteriorPoint, 3).unwrap();
        // the held-out slice has only 15 points, so leave slack for one swap
        assert!(record.auc_roc >= 0.85, "split-test AUC {}", record.auc_roc);
        let metrics = evaluate_model(&model, &ds).unwrap();
        assert!(metrics.auc_roc > 0.9, "full-data AUC {}", metrics.auc_roc);
    }
}
