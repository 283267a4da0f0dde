//! Locally adaptive one-class classifier fusion under dynamic lp-norm
//! constraints.
//!
//! Four kernel base learners (SVDD, one-class GP, kernel PCA, GMM) produce a
//! score matrix; per-sample fusion weights are optimized over unit lp balls
//! by a log-barrier interior-point method, with a Frank-Wolfe baseline and
//! fixed fusion rules alongside. The experiment layer reproduces the
//! benchmark protocol end to end: CSV ingestion, pure/non-pure splits,
//! hyperparameter grid search, repeated seeded trials, and a timing ablation
//! comparing the two optimizers.

pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod fusion;
pub mod kernels;
pub mod learners;
pub mod scorespace;

pub use error::{Error, Result};
pub use evaluation::{EvalReport, RankTable, ThresholdStrategy, TrialMetrics};
pub use features::FeatureScaler;
pub use fusion::{
    FusionMode, FusionModel, FusionRule, LocalWeightSet, OptimizeReport, OptimizerConfig,
};
pub use kernels::KernelSpec;
pub use learners::{BaseLearnerModel, BaseLearnerSpec, LearnerKind};
pub use scorespace::{NormalizerState, ScoreMatrix, Stage};
