//! Metrics, threshold selection, and the rank test used for cross-dataset
//! method comparison.
//!
//! Conventions: scores are oriented higher-is-normal; the normal class (+1)
//! is the AUC-ROC positive class, while AUC-PR treats anomalies as positives
//! to match the deployment reading. These conventions change the numbers, so
//! they are fixed here once.

mod chi2;
mod metrics;
mod threshold;

pub use chi2::chi_square_survival;
pub use metrics::{auc_pr, auc_roc, g_mean};
pub use rank_test::{skillings_mack, RankTable, SkillingsMackOutcome};
pub use threshold::{select_threshold, rpau_value, ThresholdChoice, ThresholdStrategy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metrics of a single trial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub g_mean: f64,
    pub threshold: f64,
}

/// Mean and population standard deviation of one metric across trials.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MetricSummary {
        mean,
        std: var.sqrt(),
    }
}

/// Aggregated evaluation over repeated trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_trial: Vec<TrialMetrics>,
    pub auc_roc: MetricSummary,
    pub auc_pr: MetricSummary,
    pub g_mean: MetricSummary,
}

impl EvalReport {
    pub fn from_trials(per_trial: Vec<TrialMetrics>) -> Result<Self> {
        if per_trial.is_empty() {
            return Err(Error::InsufficientData("no trials to aggregate".into()));
        }
        let collect = |f: fn(&TrialMetrics) -> f64| -> Vec<f64> {
            per_trial.iter().map(f).collect()
        };
        Ok(Self {
            auc_roc: summarize(&collect(|t| t.auc_roc)),
            auc_pr: summarize(&collect(|t| t.auc_pr)),
            g_mean: summarize(&collect(|t| t.g_mean)),
            per_trial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn summary_mean_and_population_std() {
        let s = summarize(&[90.0, 100.0]);
        assert_abs_diff_eq!(s.mean, 95.0);
        assert_abs_diff_eq!(s.std, 5.0);
    }

    #[test]
    fn single_trial_has_zero_std() {
        let s = summarize(&[0.7]);
        assert_abs_diff_eq!(s.mean, 0.7);
        assert_abs_diff_eq!(s.std, 0.0);
    }

    #[test]
    fn constant_metric_has_zero_std() {
        let s = summarize(&[0.5, 0.5, 0.5]);
        assert_abs_diff_eq!(s.std, 0.0);
    }

    #[test]
    fn report_aggregates_match_direct_recomputation() {
        let trials = vec![
            TrialMetrics {
                auc_roc: 0.9,
                auc_pr: 0.8,
                g_mean: 0.7,
                threshold: 0.5,
            },
            TrialMetrics {
                auc_roc: 1.0,
                auc_pr: 0.6,
                g_mean: 0.9,
                threshold: 0.4,
            },
        ];
        let report = EvalReport::from_trials(trials.clone()).unwrap();
        let roc: Vec<f64> = trials.iter().map(|t| t.auc_roc).collect();
        let direct = summarize(&roc);
        assert_abs_diff_eq!(report.auc_roc.mean, direct.mean);
        assert_abs_diff_eq!(report.auc_roc.std, direct.std);
    }
}
