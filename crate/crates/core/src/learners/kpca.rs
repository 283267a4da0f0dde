//! Kernel PCA novelty scorer: negative feature-space reconstruction error
//! onto the leading eigen-subspace of the doubly centered training kernel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{rbf_kernel_matrix, KernelSpec};

/// Eigenvalues at or below this are treated as numerically zero and dropped.
const EIGENVALUE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpcaModel {
    train: DMatrix<f64>,
    kernel: KernelSpec,
    /// Orthonormal eigenvectors of the centered kernel, one column per
    /// retained component, eigenvalues descending.
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    /// Per-row means of the training kernel and the grand mean, for centering
    /// test kernel vectors.
    row_means: DVector<f64>,
    grand_mean: f64,
}

impl KpcaModel {
    pub fn fit(x_train: &DMatrix<f64>, kernel: &KernelSpec, subspace_dim: usize) -> Result<Self> {
        let k = rbf_kernel_matrix(x_train, x_train, kernel)?;
        let n = k.nrows();
        let row_means = DVector::from_fn(n, |i, _| k.row(i).sum() / n as f64);
        let grand_mean = row_means.sum() / n as f64;

        // doubly centered kernel
        let centered = DMatrix::from_fn(n, n, |i, j| {
            k[(i, j)] - row_means[i] - row_means[j] + grand_mean
        });
        let eig = centered.symmetric_eigen();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

        let mut kept = Vec::new();
        for &idx in &order {
            if kept.len() >= subspace_dim {
                break;
            }
            if eig.eigenvalues[idx] > EIGENVALUE_FLOOR {
                kept.push(idx);
            }
        }
        if kept.is_empty() {
            return Err(Error::NumericalFailure(
                "no positive eigenvalues in centered kernel".into(),
            ));
        }
        let eigvals = DVector::from_fn(kept.len(), |c, _| eig.eigenvalues[kept[c]]);
        let eigvecs = DMatrix::from_fn(n, kept.len(), |r, c| eig.eigenvectors[(r, kept[c])]);

        Ok(Self {
            train: x_train.clone(),
            kernel: *kernel,
            eigvecs,
            eigvals,
            row_means,
            grand_mean,
        })
    }

    /// Number of retained components (may be below the requested dimension
    /// when trailing eigenvalues vanish).
    pub fn retained(&self) -> usize {
        self.eigvals.len()
    }

    /// Same model restricted to the leading `subspace_dim` components,
    /// avoiding a fresh eigendecomposition when sweeping dimensions.
    pub fn truncated(&self, subspace_dim: usize) -> Self {
        let q = subspace_dim.min(self.eigvals.len()).max(1);
        Self {
            train: self.train.clone(),
            kernel: self.kernel,
            eigvecs: self.eigvecs.columns(0, q).into_owned(),
            eigvals: DVector::from_fn(q, |i, _| self.eigvals[i]),
            row_means: self.row_means.clone(),
            grand_mean: self.grand_mean,
        }
    }

    /// Feature-space reconstruction errors, clamped at zero.
    pub fn reconstruction_errors(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let kx = rbf_kernel_matrix(x, &self.train, &self.kernel)?;
        let n = self.train.nrows() as f64;
        let m = x.nrows();
        let mut errors = DVector::zeros(m);
        for i in 0..m {
            let row = kx.row(i);
            let row_mean = row.sum() / n;
            // centered test kernel vector
            let centered = DVector::from_fn(self.train.nrows(), |j, _| {
                row[j] - row_mean - self.row_means[j] + self.grand_mean
            });
            // centered k(x,x); k(x,x) = 1 for the RBF kernel
            let self_term = 1.0 - 2.0 * row_mean + self.grand_mean;
            let mut projected = 0.0;
            for c in 0..self.eigvals.len() {
                let beta = self.eigvecs.column(c).dot(&centered) / self.eigvals[c].sqrt();
                projected += beta * beta;
            }
            errors[i] = (self_term - projected).max(0.0);
        }
        Ok(errors)
    }

    pub fn score(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(-self.reconstruction_errors(x)?)
    }
}
