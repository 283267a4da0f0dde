//! AUC-ROC (Mann-Whitney form), AUC-PR (average precision with tie blocks),
//! and G-mean at a fixed threshold.

use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &[i8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput("labels must be +1 or -1".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    Ok(())
}

/// P(score+ > score-) + 0.5 P(tie), computed through average ranks; equals
/// the trapezoidal ROC area. Normal (+1) is the positive class.
pub fn auc_roc(scores: &[f64], labels: &[i8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC-ROC needs both classes present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average ranks over tie groups, ranks are 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision with anomalies (-1) as the positive class, ranked by
/// descending anomaly score (ascending normal score). Tie groups enter as
/// blocks: precision is taken at each block end.
pub fn auc_pr(scores: &[f64], labels: &[i8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_anom = labels.iter().filter(|&&y| y == -1).count();
    if n_anom == 0 {
        return Err(Error::UndefinedMetric(
            "AUC-PR needs at least one anomaly".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    // most anomalous first
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let block_tp = order[i..=j].iter().filter(|&&idx| labels[idx] == -1).count();
        tp += block_tp;
        seen += j - i + 1;
        if block_tp > 0 {
            let precision = tp as f64 / seen as f64;
            let recall_gain = block_tp as f64 / n_anom as f64;
            ap += recall_gain * precision;
        }
        i = j + 1;
    }
    Ok(ap)
}

/// sqrt(TPR * TNR) with prediction normal iff score >= threshold.
pub fn g_mean(scores: &[f64], labels: &[i8], threshold: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    let mut tp = 0usize;
    let mut fn_ = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    for (&s, &y) in scores.iter().zip(labels) {
        let predicted_normal = s >= threshold;
        match (y, predicted_normal) {
            (1, true) => tp += 1,
            (1, false) => fn_ += 1,
            (-1, false) => tn += 1,
            (-1, true) => fp += 1,
            _ => unreachable!(),
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(Error::UndefinedMetric(
            "G-mean needs both classes present".into(),
        ));
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    Ok((tpr * tnr).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn auc_perfect_separation() {
        let scores = [5.0, 4.0, 1.0, 0.5];
        let labels = [1, 1, -1, -1];
        assert_abs_diff_eq!(auc_roc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let scores = [2.0, 2.0, 2.0, 2.0];
        let labels = [1, -1, 1, -1];
        assert_abs_diff_eq!(auc_roc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_enumerated_pairs() {
        // pairs (3,2),(3,0),(1,2),(1,0): 3 wins, 1 loss -> 0.75
        let scores = [3.0, 2.0, 1.0, 0.0];
        let labels = [1, -1, 1, -1];
        assert_abs_diff_eq!(auc_roc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_single_class_undefined() {
        assert!(matches!(
            auc_roc(&[1.0, 2.0], &[1, 1]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ap_single_anomaly_ranked_most_anomalous() {
        // lowest normal-score = most anomalous
        let scores = [0.0, 5.0, 6.0];
        let labels = [-1, 1, 1];
        assert_abs_diff_eq!(auc_pr(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn ap_all_tied_equals_prevalence() {
        let scores = [1.0, 1.0, 1.0, 1.0];
        let labels = [-1, 1, 1, 1];
        assert_abs_diff_eq!(auc_pr(&scores, &labels).unwrap(), 0.25);
    }

    #[test]
    fn ap_inverse_ranking_single_anomaly() {
        // the anomaly has the HIGHEST normal score -> found last: AP = 1/m
        let scores = [9.0, 1.0, 2.0, 3.0];
        let labels = [-1, 1, 1, 1];
        assert_abs_diff_eq!(auc_pr(&scores, &labels).unwrap(), 0.25);
    }

    #[test]
    fn gmean_perfect_threshold() {
        let scores = [3.0, 2.5, 0.5, 0.2];
        let labels = [1, 1, -1, -1];
        assert_abs_diff_eq!(g_mean(&scores, &labels, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn gmean_threshold_below_everything() {
        let scores = [3.0, 2.5, 0.5];
        let labels = [1, 1, -1];
        assert_abs_diff_eq!(g_mean(&scores, &labels, -10.0).unwrap(), 0.0);
    }

    #[test]
    fn gmean_quarter_tnr() {
        // TPR = 1, TNR = 1/4 -> 0.5
        let scores = [2.0, 2.0, 1.5, 1.5, 1.5, 0.0];
        let labels = [1, 1, -1, -1, -1, -1];
        assert_abs_diff_eq!(g_mean(&scores, &labels, 1.0).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_increasing_transform(seed in 0u64..200) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(4..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            labels[0] = 1;
            labels[1] = -1;
            let base = auc_roc(&scores, &labels).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|&s| (s * 0.5).exp() + 3.0 * s).collect();
            let after = auc_roc(&transformed, &labels).unwrap();
            prop_assert!((base - after).abs() <= 1e-12);
        }

        #[test]
        fn auc_negation_complements_without_ties(seed in 0u64..200) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(4..40);
            // distinct scores: a shuffled ramp
            let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
            scores.shuffle(&mut rng);
            let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            labels[0] = 1;
            labels[1] = -1;
            let a = auc_roc(&scores, &labels).unwrap();
            let neg: Vec<f64> = scores.iter().map(|&s| -s).collect();
            let b = auc_roc(&neg, &labels).unwrap();
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn gmean_bounded_and_tight_only_when_perfect(seed in 0u64..200) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(4..30);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            labels[0] = 1;
            labels[1] = -1;
            let threshold = rng.random_range(-1.0..1.0);
            let g = g_mean(&scores, &labels, threshold).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            if (g - 1.0).abs() < 1e-12 {
                // perfect G-mean forces perfect separation at the threshold
                for (&s, &y) in scores.iter().zip(&labels) {
                    prop_assert_eq!(y == 1, s >= threshold);
                }
            }
        }
    }
}
