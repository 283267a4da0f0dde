//! Support vector data description as the hard-margin minimum enclosing ball
//! in RBF feature space. The dual is a quadratic over the probability simplex,
//! solved by Frank-Wolfe with exact line search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{rbf_kernel_matrix, KernelSpec};

const MAX_ITERS: usize = 2000;
const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvddModel {
    train: DMatrix<f64>,
    kernel: KernelSpec,
    alpha: DVector<f64>,
    /// alpha' K alpha, the squared norm of the ball center.
    center_norm: f64,
}

impl SvddModel {
    pub fn fit(x_train: &DMatrix<f64>, kernel: &KernelSpec) -> Result<Self> {
        let k = rbf_kernel_matrix(x_train, x_train, kernel)?;
        let n = k.nrows();
        let diag: DVector<f64> = DVector::from_fn(n, |i, _| k[(i, i)]);

        // minimize alpha' K alpha - alpha' diag(K) over the simplex
        let mut alpha = DVector::from_element(n, 1.0 / n as f64);
        let mut k_alpha = &k * &alpha;

        for _ in 0..MAX_ITERS {
            // gradient = 2 K alpha - diag
            let grad = DVector::from_fn(n, |i, _| 2.0 * k_alpha[i] - diag[i]);
            let (j, &gmin) = grad
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let gap = grad.dot(&alpha) - gmin;
            if gap <= GAP_TOL {
                break;
            }
            // direction d = e_j - alpha; exact step for the quadratic
            let g_dot_d = gmin - grad.dot(&alpha);
            let k_col_j = k.column(j);
            let a_k_a = alpha.dot(&k_alpha);
            let d_k_d = a_k_a - 2.0 * k_alpha[j] + k[(j, j)];
            let gamma = if d_k_d > 1e-18 {
                (-g_dot_d / (2.0 * d_k_d)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            if gamma == 0.0 {
                break;
            }
            alpha *= 1.0 - gamma;
            alpha[j] += gamma;
            k_alpha = k_alpha * (1.0 - gamma) + k_col_j * gamma;
            debug_assert!(alpha.iter().all(|&a| a >= 0.0));
            debug_assert!((alpha.sum() - 1.0).abs() < 1e-9);
        }

        let center_norm = alpha.dot(&(&k * &alpha));
        if !center_norm.is_finite() {
            return Err(Error::NumericalFailure("SVDD center norm not finite".into()));
        }
        Ok(Self {
            train: x_train.clone(),
            kernel: *kernel,
            alpha,
            center_norm,
        })
    }

    /// Negative squared feature-space distance to the ball center:
    /// -(k(x,x) - 2 k_x' alpha + alpha' K alpha).
    pub fn score(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let kx = rbf_kernel_matrix(x, &self.train, &self.kernel)?;
        let proj = &kx * &self.alpha;
        Ok(DVector::from_fn(x.nrows(), |i, _| {
            -(1.0 - 2.0 * proj[i] + self.center_norm)
        }))
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilateral_triangle_gives_uniform_coefficients() {
        let h = 3.0f64.sqrt() / 2.0;
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.5, h]);
        let model = SvddModel::fit(&x, &KernelSpec::new(1.0).unwrap()).unwrap();
        for &a in model.alpha().iter() {
            assert_abs_diff_eq!(a, 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn training_point_nearest_center_scores_highest() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(25, 2, |_, _| rng.random_range(-1.0..1.0));
        let kernel = KernelSpec::new(2.0).unwrap();
        let model = SvddModel::fit(&x, &kernel).unwrap();

        // brute-force squared distance to center over the training set
        let k = rbf_kernel_matrix(&x, &x, &kernel).unwrap();
        let ka = &k * model.alpha();
        let dists: Vec<f64> = (0..x.nrows())
            .map(|i| k[(i, i)] - 2.0 * ka[i] + model.center_norm)
            .collect();
        let brute_best = dists
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;

        let scores = model.score(&x).unwrap();
        let score_best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(brute_best, score_best);
        // and the max score equals the min distance, negated
        assert_abs_diff_eq!(scores[score_best], -dists[brute_best], epsilon = 1e-12);
    }

    #[test]
    fn simplex_feasibility_of_solution() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(40, 3, |_, _| rng.random_range(-2.0..2.0));
        let model = SvddModel::fit(&x, &KernelSpec::new(3.0).unwrap()).unwrap();
        assert!(model.alpha().iter().all(|&a| a >= 0.0));
        assert_abs_diff_eq!(model.alpha().sum(), 1.0, epsilon = 1e-9);
    }
}
