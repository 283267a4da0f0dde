//! RBF kernel evaluation and the data-derived width base shared by the
//! kernelized learners.
//!
//! The kernel form is fixed as `exp(-||x - y||^2 / width)`; the width grid
//! `{0.25, 0.5, 1.0} x M` absorbs any constant factor, where `M` is the mean
//! squared Euclidean distance over unordered distinct training pairs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplier grid applied to the width base `M`.
pub const WIDTH_MULTIPLIERS: [f64; 3] = [0.25, 0.5, 1.0];

/// An RBF kernel width, optionally tagged with the grid multiplier it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    width: f64,
    width_multiplier: f64,
}

impl KernelSpec {
    /// Direct construction from an explicit width.
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "kernel width must be positive and finite, got {width}"
            )));
        }
        Ok(Self {
            width,
            width_multiplier: 1.0,
        })
    }

    /// Grid construction: width = multiplier * mean_sq_dist. A degenerate base
    /// of zero (all training points identical) is replaced by 1.0 so the
    /// kernel stays well-defined; such data is pathological anyway.
    pub fn from_grid(multiplier: f64, mean_sq_dist: f64) -> Result<Self> {
        if !(multiplier > 0.0) || !multiplier.is_finite() {
            return Err(Error::InvalidInput(format!(
                "width multiplier must be positive, got {multiplier}"
            )));
        }
        if mean_sq_dist < 0.0 || !mean_sq_dist.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mean squared distance must be non-negative, got {mean_sq_dist}"
            )));
        }
        let base = if mean_sq_dist > 0.0 { mean_sq_dist } else { 1.0 };
        Ok(Self {
            width: multiplier * base,
            width_multiplier: multiplier,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn width_multiplier(&self) -> f64 {
        self.width_multiplier
    }
}

/// Mean of ||x_i - x_j||^2 over all n(n-1)/2 unordered distinct pairs.
pub fn mean_squared_distance(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "mean squared distance needs at least 2 samples, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite entry in feature matrix".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(i, c)] - x[(j, c)];
                d2 += diff * diff;
            }
            total += d2;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(total / pairs)
}

/// Pairwise squared Euclidean distances, n x m. Shared by the kernel and the
/// locality machinery so widths can be regridded without recomputing distances.
pub fn squared_distance_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::InvalidInput(format!(
            "feature dimension mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let xn: Vec<f64> = x.row_iter().map(|r| r.dot(&r)).collect();
    let yn: Vec<f64> = y.row_iter().map(|r| r.dot(&r)).collect();
    let cross = x * y.transpose();
    let mut d2 = DMatrix::zeros(x.nrows(), y.nrows());
    for i in 0..x.nrows() {
        for j in 0..y.nrows() {
            // clamp tiny negatives from cancellation
            d2[(i, j)] = (xn[i] + yn[j] - 2.0 * cross[(i, j)]).max(0.0);
        }
    }
    Ok(d2)
}

/// Kernel matrix K[i][j] = exp(-||x_i - y_j||^2 / width).
pub fn rbf_kernel_matrix(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    spec: &KernelSpec,
) -> Result<DMatrix<f64>> {
    let d2 = squared_distance_matrix(x, y)?;
    Ok(rbf_from_squared_distances(&d2, spec))
}

/// Kernel matrix from precomputed squared distances.
pub fn rbf_from_squared_distances(d2: &DMatrix<f64>, spec: &KernelSpec) -> DMatrix<f64> {
    d2.map(|v| (-v / spec.width).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            rows.len(),
            rows[0].len(),
            &rows.iter().flat_map(|r| r.iter().copied()).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn mean_sq_dist_single_pair() {
        let x = mat(&[&[0.0], &[2.0]]);
        assert_abs_diff_eq!(mean_squared_distance(&x).unwrap(), 4.0);
    }

    #[test]
    fn mean_sq_dist_three_points() {
        // pairs {1, 4, 1}, mean = 2
        let x = mat(&[&[0.0], &[1.0], &[2.0]]);
        assert_abs_diff_eq!(mean_squared_distance(&x).unwrap(), 2.0);
    }

    #[test]
    fn mean_sq_dist_identical_points_is_zero() {
        let x = mat(&[&[3.0, 3.0], &[3.0, 3.0], &[3.0, 3.0]]);
        assert_abs_diff_eq!(mean_squared_distance(&x).unwrap(), 0.0);
        // grid construction substitutes a unit base
        let spec = KernelSpec::from_grid(0.5, 0.0).unwrap();
        assert_abs_diff_eq!(spec.width(), 0.5);
    }

    #[test]
    fn mean_sq_dist_rejects_short_input() {
        let x = mat(&[&[1.0]]);
        assert!(matches!(
            mean_squared_distance(&x),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mean_sq_dist_rejects_non_finite() {
        let x = mat(&[&[0.0], &[f64::NAN]]);
        assert!(matches!(
            mean_squared_distance(&x),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rbf_zero_distance_is_one() {
        let x = mat(&[&[0.0]]);
        let k = rbf_kernel_matrix(&x, &x, &KernelSpec::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], 1.0);
    }

    #[test]
    fn rbf_unit_distance_unit_width() {
        let x = mat(&[&[0.0]]);
        let y = mat(&[&[1.0]]);
        let k = rbf_kernel_matrix(&x, &y, &KernelSpec::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn rbf_huge_width_saturates_to_one() {
        let x = mat(&[&[0.0, 1.0], &[2.0, -1.0]]);
        let y = mat(&[&[5.0, 5.0]]);
        let k = rbf_kernel_matrix(&x, &y, &KernelSpec::new(1e12).unwrap()).unwrap();
        for v in k.iter() {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rbf_dimension_mismatch() {
        let x = mat(&[&[0.0, 1.0]]);
        let y = mat(&[&[0.0]]);
        assert!(matches!(
            rbf_kernel_matrix(&x, &y, &KernelSpec::new(1.0).unwrap()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn kernel_spec_rejects_bad_width() {
        assert!(KernelSpec::new(0.0).is_err());
        assert!(KernelSpec::new(-1.0).is_err());
        assert!(KernelSpec::new(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn kernel_matrix_symmetric_unit_diagonal_psd(
            seed in 0u64..500,
            n in 2usize..20,
            f in 1usize..5,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(n, f, |_, _| rng.random_range(-3.0..3.0));
            let k = rbf_kernel_matrix(&x, &x, &KernelSpec::new(2.0).unwrap()).unwrap();
            // symmetry
            let asym = (&k - k.transpose()).abs().max();
            prop_assert!(asym <= 1e-12);
            // unit diagonal, entries in (0, 1]
            for i in 0..n {
                prop_assert!((k[(i, i)] - 1.0).abs() <= 1e-12);
            }
            prop_assert!(k.iter().all(|&v| v > 0.0 && v <= 1.0 + 1e-12));
            // PSD up to jitter
            let eig = k.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&l| l >= -1e-8));
        }

        #[test]
        fn mean_sq_dist_permutation_and_translation_invariant(
            seed in 0u64..500,
            n in 2usize..12,
            shift in -10.0f64..10.0,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..2.0));
            let base = mean_squared_distance(&x).unwrap();

            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let permuted = DMatrix::from_fn(n, 3, |i, j| x[(order[i], j)]);
            prop_assert!((mean_squared_distance(&permuted).unwrap() - base).abs() <= 1e-9);

            let translated = x.map(|v| v + shift);
            prop_assert!((mean_squared_distance(&translated).unwrap() - base).abs() <= 1e-8 * (1.0 + base));
        }
    }
}
