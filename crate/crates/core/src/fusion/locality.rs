//! Local dispersion and the per-sample norm exponent.
//!
//! A sample's dispersion is its mean Euclidean distance to its k nearest
//! training neighbors; dividing by the training median gives the relative
//! dispersion r. The exponent p_i = 1 + (p_base - 1) / max(r, 1e-6), clamped
//! to the admissible range, so high local variability drives p toward 1
//! (sparse weights) and r = 1 reproduces p_base exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fusion::{P_MAX, P_MIN};

const DISPERSION_RATIO_FLOOR: f64 = 1e-6;

/// Training-side dispersion statistics reused across queries.
#[derive(Debug, Clone)]
pub struct LocalityIndex {
    k: usize,
    dispersions: Vec<f64>,
    median_dispersion: f64,
}

impl LocalityIndex {
    /// Per-row dispersions (each row excludes itself from its neighbor set)
    /// and their median. Requires 1 <= k < n.
    pub fn fit(x_train: &DMatrix<f64>, k: usize) -> Result<Self> {
        let n = x_train.nrows();
        if k == 0 || k >= n {
            return Err(Error::InvalidInput(format!(
                "locality needs 1 <= k < n, got k={k}, n={n}"
            )));
        }
        let dispersions: Vec<f64> = (0..n)
            .map(|i| knn_mean_distance(&x_train.row(i).transpose(), x_train, k, Some(i)))
            .collect();
        let median_dispersion = median(&dispersions);
        Ok(Self {
            k,
            dispersions,
            median_dispersion,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn median_dispersion(&self) -> f64 {
        self.median_dispersion
    }

    pub fn dispersion(&self, i: usize) -> f64 {
        self.dispersions[i]
    }

    /// Exponent for the i-th training sample.
    pub fn exponent_for_row(&self, i: usize, p_base: f64) -> f64 {
        exponent_from_ratio(self.ratio(self.dispersions[i]), p_base)
    }

    /// Exponent for an arbitrary point (dispersion computed against all
    /// training rows).
    pub fn exponent_for_point(&self, x: &DVector<f64>, x_train: &DMatrix<f64>, p_base: f64) -> f64 {
        let d = knn_mean_distance(x, x_train, self.k, None);
        exponent_from_ratio(self.ratio(d), p_base)
    }

    fn ratio(&self, dispersion: f64) -> f64 {
        if self.median_dispersion > 0.0 {
            dispersion / self.median_dispersion
        } else {
            // degenerate training set (all duplicates): neutral ratio
            1.0
        }
    }
}

/// One-shot form of the locality map for a single query point. A zero-distance
/// match in the training set is treated as the query itself and skipped.
pub fn locality_exponent(
    x: &DVector<f64>,
    x_train: &DMatrix<f64>,
    p_base: f64,
    k: usize,
) -> Result<f64> {
    let n = x_train.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "locality needs 1 <= k < n, got k={k}, n={n}"
        )));
    }
    if !(p_base >= P_MIN) {
        return Err(Error::InvalidInput(format!(
            "p_base must be at least {P_MIN}, got {p_base}"
        )));
    }
    let index = LocalityIndex::fit(x_train, k)?;
    // exclude an exact self-match so training points see their true neighbors
    let self_row = (0..n).find(|&i| {
        let mut d2 = 0.0;
        for c in 0..x_train.ncols() {
            let diff = x_train[(i, c)] - x[c];
            d2 += diff * diff;
        }
        d2 == 0.0
    });
    let dispersion = knn_mean_distance(x, x_train, k, self_row);
    Ok(exponent_from_ratio(index.ratio(dispersion), p_base))
}

fn exponent_from_ratio(ratio: f64, p_base: f64) -> f64 {
    (1.0 + (p_base - 1.0) / ratio.max(DISPERSION_RATIO_FLOOR)).clamp(P_MIN, P_MAX)
}

/// Mean Euclidean distance from x to its k nearest rows of the matrix,
/// optionally skipping one row index.
fn knn_mean_distance(
    x: &DVector<f64>,
    rows: &DMatrix<f64>,
    k: usize,
    skip: Option<usize>,
) -> f64 {
    let mut d2: Vec<f64> = (0..rows.nrows())
        .filter(|&i| Some(i) != skip)
        .map(|i| {
            let mut acc = 0.0;
            for c in 0..rows.ncols() {
                let diff = rows[(i, c)] - x[c];
                acc += diff * diff;
            }
            acc
        })
        .collect();
    let k = k.min(d2.len());
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d2.iter().take(k).map(|v| v.sqrt()).sum::<f64>() / k as f64
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn median_dispersion_point_keeps_p_base() {
        // evenly spaced line: every interior point has the same dispersion,
        // so ratios are 1 and p stays at p_base
        let x = DMatrix::from_fn(11, 1, |i, _| i as f64);
        let index = LocalityIndex::fit(&x, 2).unwrap();
        let p = index.exponent_for_row(5, 2.0);
        assert_abs_diff_eq!(p, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn half_ratio_formula() {
        // r = 0.5, p_base = 2 -> 1 + 1/0.5 = 3
        assert_abs_diff_eq!(exponent_from_ratio(0.5, 2.0), 3.0);
    }

    #[test]
    fn huge_ratio_clamps_to_floor_exponent() {
        let p = exponent_from_ratio(1e12, 2.0);
        assert_abs_diff_eq!(p, P_MIN);
    }

    #[test]
    fn zero_ratio_clamps_to_max() {
        let p = exponent_from_ratio(0.0, 8.0);
        assert_abs_diff_eq!(p, P_MAX);
    }

    #[test]
    fn sparse_region_gets_smaller_exponent() {
        // dense cluster plus one isolated point: the isolated point has
        // higher dispersion, hence lower p (sparser weights)
        let mut rows = vec![];
        for i in 0..12 {
            rows.push([i as f64 * 0.01, 0.0]);
        }
        rows.push([50.0, 50.0]);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = DMatrix::from_row_slice(13, 2, &flat);
        let index = LocalityIndex::fit(&x, 3).unwrap();
        let p_dense = index.exponent_for_row(5, 4.0);
        let p_lonely = index.exponent_for_row(12, 4.0);
        assert!(p_lonely < p_dense);
        assert!(p_lonely >= P_MIN && p_dense <= P_MAX);
    }

    #[test]
    fn one_shot_op_skips_exact_self_match() {
        let x = DMatrix::from_fn(6, 1, |i, _| i as f64);
        let query = DVector::from_column_slice(&[3.0]);
        let p = locality_exponent(&query, &x, 2.0, 2).unwrap();
        // neighbors of 3 are 2 and 4 at distance 1 each; same for the median
        // rows, so p = p_base
        assert_abs_diff_eq!(p, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn k_out_of_range_rejected() {
        let x = DMatrix::from_fn(4, 1, |i, _| i as f64);
        let q = DVector::from_column_slice(&[0.0]);
        assert!(locality_exponent(&q, &x, 2.0, 4).is_err());
        assert!(locality_exponent(&q, &x, 2.0, 0).is_err());
    }
}
