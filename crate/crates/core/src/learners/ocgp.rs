//! Kernelized one-class Gaussian process scorer: the predictive mean of a GP
//! regression onto all-ones targets, score(x) = k(x,.)' (K + lambda I)^-1 1.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{rbf_kernel_matrix, KernelSpec};

const JITTER: f64 = 1e-3;
const MAX_JITTER: f64 = 1e3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcgpModel {
    train: DMatrix<f64>,
    kernel: KernelSpec,
    /// (K + lambda I)^-1 1, applied to test kernel rows.
    weights: DVector<f64>,
}

impl OcgpModel {
    pub fn fit(x_train: &DMatrix<f64>, kernel: &KernelSpec) -> Result<Self> {
        let k = rbf_kernel_matrix(x_train, x_train, kernel)?;
        let n = k.nrows();
        let ones = DVector::from_element(n, 1.0);

        let mut jitter = JITTER;
        let weights = loop {
            let mut reg = k.clone();
            for i in 0..n {
                reg[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(reg) {
                break chol.solve(&ones);
            }
            jitter *= 10.0;
            if jitter > MAX_JITTER {
                return Err(Error::NumericalFailure(
                    "kernel matrix singular beyond jitter repair".into(),
                ));
            }
        };
        Ok(Self {
            train: x_train.clone(),
            kernel: *kernel,
            weights,
        })
    }

    pub fn score(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let kx = rbf_kernel_matrix(x, &self.train, &self.kernel)?;
        Ok(&kx * &self.weights)
    }
}
