//! Per-column min-max feature scaling to [0, 1], fitted on training data only
//! and reused for validation and test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RANGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScaler {
    mins: Vec<f64>,
    ranges: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(x_train: &DMatrix<f64>) -> Result<Self> {
        if x_train.nrows() == 0 {
            return Err(Error::InsufficientData("empty training features".into()));
        }
        let mut mins = Vec::with_capacity(x_train.ncols());
        let mut ranges = Vec::with_capacity(x_train.ncols());
        for j in 0..x_train.ncols() {
            let col = x_train.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            mins.push(lo);
            ranges.push((hi - lo).max(RANGE_FLOOR));
        }
        Ok(Self { mins, ranges })
    }

    /// Scale without clamping: validation/test values may fall outside [0, 1]
    /// when they exceed the training range.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mins.len() {
            return Err(Error::InvalidInput(format!(
                "feature count mismatch: {} vs {}",
                x.ncols(),
                self.mins.len()
            )));
        }
        let mut out = x.clone();
        for j in 0..out.ncols() {
            let (lo, range) = (self.mins[j], self.ranges[j]);
            for v in out.column_mut(j).iter_mut() {
                *v = (*v - lo) / range;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn train_columns_land_in_unit_interval() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 10.0, 5.0, 20.0, 10.0, 30.0]);
        let scaler = FeatureScaler::fit(&x).unwrap();
        let out = scaler.apply(&x).unwrap();
        assert_abs_diff_eq!(out[(0, 0)], 0.0);
        assert_abs_diff_eq!(out[(2, 0)], 1.0);
        assert_abs_diff_eq!(out[(1, 1)], 0.5);
        assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn constant_column_does_not_divide_by_zero() {
        let x = DMatrix::from_row_slice(2, 1, &[3.0, 3.0]);
        let scaler = FeatureScaler::fit(&x).unwrap();
        let out = scaler.apply(&x).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn test_data_uses_training_statistics() {
        let train = DMatrix::from_row_slice(2, 1, &[0.0, 10.0]);
        let scaler = FeatureScaler::fit(&train).unwrap();
        let test = DMatrix::from_row_slice(2, 1, &[5.0, 20.0]);
        let out = scaler.apply(&test).unwrap();
        assert_abs_diff_eq!(out[(0, 0)], 0.5);
        assert_abs_diff_eq!(out[(1, 0)], 2.0); // outside training range, unclamped
    }
}
