//! The four base one-class learners feeding the ensemble: SVDD, one-class GP,
//! kernel PCA, and a Gaussian mixture density model.
//!
//! Every learner scores with the same orientation: HIGHER = MORE NORMAL.
//! SVDD returns the negative squared feature-space distance to the ball
//! center, the GP its predictive mean against all-ones targets, KPCA the
//! negative feature-space reconstruction error, and the GMM its log-density.
//! Fitting is deterministic given (spec, data, seed); only the GMM consumes
//! the seed.

mod gmm;
mod kpca;
mod ocgp;
mod svdd;

pub use gmm::GmmModel;
pub use kpca::KpcaModel;
pub use ocgp::OcgpModel;
pub use svdd::SvddModel;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    Svdd,
    Ocgp,
    Kpca,
    Gmm,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Svdd,
        LearnerKind::Ocgp,
        LearnerKind::Kpca,
        LearnerKind::Gmm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            LearnerKind::Svdd => "svdd",
            LearnerKind::Ocgp => "ocgp",
            LearnerKind::Kpca => "kpca",
            LearnerKind::Gmm => "gmm",
        }
    }
}

/// Which learner to fit and with what hyperparameters. The enum shape keeps
/// exactly the fields relevant to each kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseLearnerSpec {
    Svdd { kernel: KernelSpec },
    Ocgp { kernel: KernelSpec },
    Kpca { kernel: KernelSpec, subspace_dim: usize },
    Gmm { components: usize },
}

impl BaseLearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            BaseLearnerSpec::Svdd { .. } => LearnerKind::Svdd,
            BaseLearnerSpec::Ocgp { .. } => LearnerKind::Ocgp,
            BaseLearnerSpec::Kpca { .. } => LearnerKind::Kpca,
            BaseLearnerSpec::Gmm { .. } => LearnerKind::Gmm,
        }
    }
}

/// Fitted state of one base learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BaseLearnerModel {
    Svdd(SvddModel),
    Ocgp(OcgpModel),
    Kpca(KpcaModel),
    Gmm(GmmModel),
}

impl BaseLearnerModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            BaseLearnerModel::Svdd(_) => LearnerKind::Svdd,
            BaseLearnerModel::Ocgp(_) => LearnerKind::Ocgp,
            BaseLearnerModel::Kpca(_) => LearnerKind::Kpca,
            BaseLearnerModel::Gmm(_) => LearnerKind::Gmm,
        }
    }

    /// Raw scores for each row of `x`, higher = more normal.
    pub fn score_samples(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let scores = match self {
            BaseLearnerModel::Svdd(m) => m.score(x)?,
            BaseLearnerModel::Ocgp(m) => m.score(x)?,
            BaseLearnerModel::Kpca(m) => m.score(x)?,
            BaseLearnerModel::Gmm(m) => m.score(x)?,
        };
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "{} produced a non-finite score",
                self.kind().label()
            )));
        }
        Ok(scores)
    }
}

/// Fit one base learner on training features (normals only in the pure path).
pub fn fit_base_learner(
    spec: &BaseLearnerSpec,
    x_train: &DMatrix<f64>,
    seed: u64,
) -> Result<BaseLearnerModel> {
    let n = x_train.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "fitting needs at least 2 samples, got {n}"
        )));
    }
    if x_train.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite training feature".into()));
    }
    match spec {
        BaseLearnerSpec::Svdd { kernel } => Ok(BaseLearnerModel::Svdd(SvddModel::fit(
            x_train, kernel,
        )?)),
        BaseLearnerSpec::Ocgp { kernel } => Ok(BaseLearnerModel::Ocgp(OcgpModel::fit(
            x_train, kernel,
        )?)),
        BaseLearnerSpec::Kpca {
            kernel,
            subspace_dim,
        } => {
            if *subspace_dim == 0 || *subspace_dim > n {
                return Err(Error::InvalidInput(format!(
                    "KPCA subspace dimension {subspace_dim} out of range for {n} samples"
                )));
            }
            Ok(BaseLearnerModel::Kpca(KpcaModel::fit(
                x_train,
                kernel,
                *subspace_dim,
            )?))
        }
        BaseLearnerSpec::Gmm { components } => {
            if *components == 0 {
                return Err(Error::InvalidInput("GMM needs at least one component".into()));
            }
            Ok(BaseLearnerModel::Gmm(GmmModel::fit(
                x_train,
                *components,
                seed,
            )?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Tight Gaussian cluster plus far outliers; every learner must rank a
    /// held-out cluster point above the outliers.
    fn cluster_and_outliers(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || {
            let u1: f64 = rng.random_range(1e-9..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (-2.0 * u1.ln()).sqrt() * u2.cos()
        };
        let train = DMatrix::from_fn(60, 2, |_, _| normal());
        let held_out = DMatrix::from_fn(10, 2, |_, _| 0.5 * normal());
        let outliers = DMatrix::from_row_slice(4, 2, &[8.0, 8.0, -9.0, 7.0, 10.0, -6.0, -7.5, -8.5]);
        (train, held_out, outliers)
    }

    #[test]
    fn all_learners_separate_cluster_from_outliers() {
        let (train, held_out, outliers) = cluster_and_outliers(5);
        let m_dist = crate::kernels::mean_squared_distance(&train).unwrap();
        let kernel = KernelSpec::from_grid(1.0, m_dist).unwrap();
        let specs = [
            BaseLearnerSpec::Svdd { kernel },
            BaseLearnerSpec::Ocgp { kernel },
            BaseLearnerSpec::Kpca {
                kernel,
                subspace_dim: 6,
            },
            BaseLearnerSpec::Gmm { components: 1 },
        ];
        for spec in &specs {
            let model = fit_base_learner(spec, &train, 17).unwrap();
            let s_in = model.score_samples(&held_out).unwrap();
            let s_out = model.score_samples(&outliers).unwrap();
            let mean_in = s_in.sum() / s_in.len() as f64;
            let mean_out = s_out.sum() / s_out.len() as f64;
            assert!(
                mean_in > mean_out,
                "{}: inlier mean {mean_in} not above outlier mean {mean_out}",
                spec.kind().label()
            );
            // each held-out cluster point above each outlier
            for a in s_in.iter() {
                for b in s_out.iter() {
                    assert!(a > b, "{}: {a} <= {b}", spec.kind().label());
                }
            }
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let (train, held_out, _) = cluster_and_outliers(9);
        let kernel = KernelSpec::new(2.0).unwrap();
        for spec in [
            BaseLearnerSpec::Svdd { kernel },
            BaseLearnerSpec::Ocgp { kernel },
            BaseLearnerSpec::Kpca {
                kernel,
                subspace_dim: 4,
            },
            BaseLearnerSpec::Gmm { components: 2 },
        ] {
            let a = fit_base_learner(&spec, &train, 123).unwrap();
            let b = fit_base_learner(&spec, &train, 123).unwrap();
            let sa = a.score_samples(&held_out).unwrap();
            let sb = b.score_samples(&held_out).unwrap();
            assert_eq!(
                sa.as_slice(),
                sb.as_slice(),
                "{} scores differ across identical fits",
                spec.kind().label()
            );
        }
    }

    #[test]
    fn kpca_dim_out_of_range_rejected() {
        let train = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let spec = BaseLearnerSpec::Kpca {
            kernel: KernelSpec::new(1.0).unwrap(),
            subspace_dim: 4,
        };
        assert!(matches!(
            fit_base_learner(&spec, &train, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn score_dimension_mismatch_rejected() {
        let train = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let spec = BaseLearnerSpec::Svdd {
            kernel: KernelSpec::new(1.0).unwrap(),
        };
        let model = fit_base_learner(&spec, &train, 0).unwrap();
        let bad = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.0]);
        assert!(model.score_samples(&bad).is_err());
    }
}
