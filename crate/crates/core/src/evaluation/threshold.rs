//! Decision-threshold selection on validation fused scores.
//!
//! Two strategies: a percentile rule on normal-only scores whose companion
//! selection criterion is the mean positive margin above the unity-normalized
//! threshold (used for hyperparameter tuning), and exhaustive G-mean
//! maximization over score midpoints when +/-1 labels are available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::metrics::g_mean;
use crate::scorespace::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdStrategy {
    /// Threshold at the rho-th percentile of normal validation scores.
    Rpau { rho: u32 },
    /// Threshold maximizing G-mean over midpoints of adjacent sorted scores.
    PseudoNegGmean,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    /// The tuning criterion achieved: the relative-margin value for the
    /// percentile rule, the best G-mean otherwise.
    pub criterion_value: f64,
}

/// Mean positive relative margin above the threshold, computed on scores
/// shifted so their minimum is exactly 1 (shifted positive first; the unit
/// anchor keeps the ratio well-defined for any score sign).
pub fn rpau_value(scores: &[f64], rho: u32) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InsufficientData("no validation scores".into()));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = scores.iter().map(|&s| s - min + 1.0).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let theta = percentile_sorted(&sorted, rho as f64);
    debug_assert!(theta > 0.0);
    Ok(shifted.iter().map(|&s| (s / theta - 1.0).max(0.0)).sum::<f64>() / shifted.len() as f64)
}

pub fn select_threshold(
    scores: &[f64],
    labels: Option<&[i8]>,
    strategy: ThresholdStrategy,
) -> Result<ThresholdChoice> {
    if scores.is_empty() {
        return Err(Error::InsufficientData("no validation scores".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite validation score".into()));
    }
    match strategy {
        ThresholdStrategy::Rpau { rho } => {
            if !(1..=10).contains(&rho) {
                return Err(Error::InvalidInput(format!("rho must be in 1..=10, got {rho}")));
            }
            if let Some(labels) = labels {
                if labels.iter().any(|&y| y != 1) {
                    return Err(Error::InvalidInput(
                        "the percentile rule runs on normal-only validation scores".into(),
                    ));
                }
            }
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let threshold = percentile_sorted(&sorted, rho as f64);
            Ok(ThresholdChoice {
                threshold,
                criterion_value: rpau_value(scores, rho)?,
            })
        }
        ThresholdStrategy::PseudoNegGmean => {
            let labels = labels.ok_or_else(|| {
                Error::InvalidInput("G-mean threshold selection needs labels".into())
            })?;
            if labels.len() != scores.len() {
                return Err(Error::InvalidInput("score/label length mismatch".into()));
            }
            select_gmean_threshold(scores, labels)
        }
    }
}

fn select_gmean_threshold(scores: &[f64], labels: &[i8]) -> Result<ThresholdChoice> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();

    if sorted.len() == 1 {
        // all scores identical: threshold at the common value, ties accepted
        let threshold = sorted[0];
        let value = g_mean(scores, labels, threshold).unwrap_or(0.0);
        return Ok(ThresholdChoice {
            threshold,
            criterion_value: value,
        });
    }

    // candidates: midpoints of adjacent distinct scores, tracking gap width;
    // ties on G-mean break toward the widest separating gap, then the lowest
    // threshold
    let mut best: Option<(f64, f64, f64)> = None; // (gmean, gap, threshold)
    for w in sorted.windows(2) {
        let threshold = 0.5 * (w[0] + w[1]);
        let gap = w[1] - w[0];
        let value = g_mean(scores, labels, threshold)?;
        let candidate = (value, gap, threshold);
        best = Some(match best {
            None => candidate,
            Some(cur) => {
                let better = value > cur.0 + 1e-15
                    || ((value - cur.0).abs() <= 1e-15
                        && (gap > cur.1 + 1e-15
                            || ((gap - cur.1).abs() <= 1e-15 && threshold < cur.2)));
                if better {
                    candidate
                } else {
                    cur
                }
            }
        });
    }
    let (value, _, threshold) = best.unwrap();
    Ok(ThresholdChoice {
        threshold,
        criterion_value: value,
    })
}
