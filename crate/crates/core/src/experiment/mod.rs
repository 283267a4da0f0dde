//! The benchmark harness: dataset ingestion, split protocols, hyperparameter
//! grid search, repeated seeded trials, and the optimizer timing ablation.

mod ablation;
mod dataset;
mod grid;
mod splits;
mod trials;

pub use ablation::{timing_ablation, AblationCell, AblationConfig, AblationTable};
pub use dataset::{load_dataset, Dataset, DatasetSchema};
pub use grid::{GridPoint, GridSelection, HyperGrid, TuningCriterion};
pub use splits::{make_splits, SplitMode, SplitPlan};
pub use trials::{
    evaluate_model, fit_model, run_trials, Method, MethodSummary, PhaseTiming, RunConfig,
    RunOutcome, TrialRecord,
};
