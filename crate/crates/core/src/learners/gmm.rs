//! Full-covariance Gaussian mixture density model fitted by EM, scored by
//! mixture log-density. Initialization is k-means++ style seeding from an
//! explicit seed; covariance updates carry a trace-scaled ridge.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_EM_ITERS: usize = 200;
const LOG_LIKELIHOOD_TOL: f64 = 1e-8;
const RIDGE_SCALE: f64 = 1e-6;
const RIDGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmModel {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
}

impl GmmModel {
    pub fn fit(x: &DMatrix<f64>, components: usize, seed: u64) -> Result<Self> {
        let n = x.nrows();
        let f = x.ncols();
        let k = components.min(n);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut means = kmeans_pp_centers(x, k, &mut rng);
        let global_cov = ridged(&sample_covariance(x, &mean_row(x)), f);
        let mut covariances = vec![global_cov; k];
        let mut weights = vec![1.0 / k as f64; k];

        let mut prev_ll = f64::NEG_INFINITY;
        for _ in 0..MAX_EM_ITERS {
            // E step in log space
            let chols: Vec<GaussianChol> = (0..k)
                .map(|c| GaussianChol::new(&covariances[c]))
                .collect::<Result<_>>()?;
            let mut log_resp = DMatrix::zeros(n, k);
            let mut ll = 0.0;
            for i in 0..n {
                let xi = x.row(i).transpose();
                let mut row = vec![0.0; k];
                for c in 0..k {
                    row[c] = weights[c].max(1e-300).ln() + chols[c].log_density(&xi, &means[c]);
                }
                let norm = log_sum_exp(&row);
                ll += norm;
                for c in 0..k {
                    log_resp[(i, c)] = row[c] - norm;
                }
            }

            // M step
            for c in 0..k {
                let resp: Vec<f64> = (0..n).map(|i| log_resp[(i, c)].exp()).collect();
                let total: f64 = resp.iter().sum();
                if total < 1e-10 {
                    // starved component: keep previous parameters, zero weight
                    weights[c] = total / n as f64;
                    continue;
                }
                weights[c] = total / n as f64;
                let mut mean = DVector::zeros(f);
                for i in 0..n {
                    mean += x.row(i).transpose() * resp[i];
                }
                mean /= total;
                let mut cov = DMatrix::zeros(f, f);
                for i in 0..n {
                    let d = x.row(i).transpose() - &mean;
                    cov += &d * d.transpose() * resp[i];
                }
                cov /= total;
                means[c] = mean;
                covariances[c] = ridged(&cov, f);
            }

            if (ll - prev_ll).abs() < LOG_LIKELIHOOD_TOL {
                break;
            }
            prev_ll = ll;
        }

        Ok(Self {
            weights,
            means,
            covariances,
        })
    }

    /// Mixture log-density per row.
    pub fn score(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let f = self.means[0].len();
        if x.ncols() != f {
            return Err(Error::InvalidInput(format!(
                "feature dimension mismatch: {} vs {}",
                x.ncols(),
                f
            )));
        }
        let chols: Vec<GaussianChol> = self
            .covariances
            .iter()
            .map(GaussianChol::new)
            .collect::<Result<_>>()?;
        let mut scores = DVector::zeros(x.nrows());
        for i in 0..x.nrows() {
            let xi = x.row(i).transpose();
            let terms: Vec<f64> = (0..self.weights.len())
                .map(|c| self.weights[c].max(1e-300).ln() + chols[c].log_density(&xi, &self.means[c]))
                .collect();
            scores[i] = log_sum_exp(&terms);
        }
        Ok(scores)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }
}

struct GaussianChol {
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
    dim: usize,
}

impl GaussianChol {
    fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::NumericalFailure("covariance not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { chol, log_det, dim })
    }

    fn log_density(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let diff = x - mean;
        let solved = self.chol.solve(&diff);
        let maha = diff.dot(&solved);
        -0.5 * (self.dim as f64 * (2.0 * std::f64::consts::PI).ln() + self.log_det + maha)
    }
}

fn mean_row(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_fn(x.ncols(), |j, _| x.column(j).sum() / n)
}

fn sample_covariance(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let f = x.ncols();
    let mut cov = DMatrix::zeros(f, f);
    for i in 0..n {
        let d = x.row(i).transpose() - mean;
        cov += &d * d.transpose();
    }
    cov / n as f64
}

fn ridged(cov: &DMatrix<f64>, f: usize) -> DMatrix<f64> {
    let ridge = (RIDGE_SCALE * cov.trace() / f as f64).max(RIDGE_FLOOR);
    let mut out = cov.clone();
    for i in 0..f {
        out[(i, i)] += ridge;
    }
    out
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance to the nearest chosen center.
fn kmeans_pp_centers(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let n = x.nrows();
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(x.row(rng.random_range(0..n)).transpose());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| (x.row(i).transpose() - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let center = x.row(next).transpose();
        for i in 0..n {
            let dist = (x.row(i).transpose() - &center).norm_squared();
            if dist < d2[i] {
                d2[i] = dist;
            }
        }
        centers.push(center);
    }
    centers
}
