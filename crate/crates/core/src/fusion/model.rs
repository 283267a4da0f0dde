//! The deployable fusion model: fitted base learners, normalization state,
//! per-sample weights with their anchors, and the decision threshold, plus a
//! versioned single-file serialization.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureScaler;
use crate::fusion::{fuse_scores, LocalWeightSet, OptimizerConfig};
use crate::learners::BaseLearnerModel;
use crate::scorespace::{apply_zscore, trimmed_minmax, NormalizerState, ScoreMatrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FusionMode {
    PureRpau,
    PurePseudoNeg,
    NonPure,
}

impl FusionMode {
    pub fn label(&self) -> &'static str {
        match self {
            FusionMode::PureRpau => "pure-rpau",
            FusionMode::PurePseudoNeg => "pure-pseudoneg",
            FusionMode::NonPure => "nonpure",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionModel {
    learner_ids: Vec<String>,
    learners: Vec<BaseLearnerModel>,
    /// Feature min-max state fitted on the training slice; None when callers
    /// feed pre-scaled features.
    feature_scaler: Option<FeatureScaler>,
    /// Z-score (and, when fitted, trim) state for the learner score columns.
    score_normalizer: NormalizerState,
    weights: LocalWeightSet,
    threshold: f64,
    mode: FusionMode,
    config: OptimizerConfig,
}

impl FusionModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        learner_ids: Vec<String>,
        learners: Vec<BaseLearnerModel>,
        feature_scaler: Option<FeatureScaler>,
        score_normalizer: NormalizerState,
        weights: LocalWeightSet,
        threshold: f64,
        mode: FusionMode,
        config: OptimizerConfig,
    ) -> Result<Self> {
        if learners.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "fusion needs at least 2 learners, got {}",
                learners.len()
            )));
        }
        if learner_ids.len() != learners.len() {
            return Err(Error::InvalidInput("learner id/model count mismatch".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        Ok(Self {
            learner_ids,
            learners,
            feature_scaler,
            score_normalizer,
            weights,
            threshold,
            mode,
            config,
        })
    }

    pub fn learner_ids(&self) -> &[String] {
        &self.learner_ids
    }

    pub fn weights(&self) -> &LocalWeightSet {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Raw -> scaled -> base scores -> z-score -> trim -> fused score,
    /// comparable against the stored threshold.
    pub fn score_features(&self, x_raw: &DMatrix<f64>) -> Result<DVector<f64>> {
        let x = match &self.feature_scaler {
            Some(scaler) => scaler.apply(x_raw)?,
            None => x_raw.clone(),
        };
        let mut columns = DMatrix::zeros(x.nrows(), self.learners.len());
        for (j, learner) in self.learners.iter().enumerate() {
            let scores = learner.score_samples(&x)?;
            columns.set_column(j, &scores);
        }
        let raw = ScoreMatrix::raw(columns, self.learner_ids.clone())?;
        let z = apply_zscore(&self.score_normalizer, &raw)?;
        // learner columns pass through the trim stage when it was fitted
        let standardized = if self.score_normalizer.trim_quantiles().is_some() {
            trimmed_minmax(&self.score_normalizer, &z)?
        } else {
            z
        };
        fuse_scores(&self.weights, &standardized, &x)
    }

    /// +1 (normal) when the normalized fused score reaches the threshold.
    pub fn classify(&self, x_raw: &DMatrix<f64>) -> Result<Vec<i8>> {
        Ok(self
            .score_features(x_raw)?
            .iter()
            .map(|&s| if s >= self.threshold { 1 } else { -1 })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::NumericalFailure(format!("serialization failed: {e}")))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: "model".into(),
            message: e.to_string(),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: FusionModel,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::learners::{fit_base_learner, BaseLearnerSpec};
    use crate::scorespace::fit_zscore;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tiny_model(seed: u64) -> (FusionModel, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = DMatrix::from_fn(30, 2, |_, _| rng.random_range(0.0..1.0));
        let kernel = KernelSpec::new(1.0).unwrap();
        let specs = vec![
            BaseLearnerSpec::Svdd { kernel },
            BaseLearnerSpec::Ocgp { kernel },
            BaseLearnerSpec::Gmm { components: 1 },
        ];
        let ids: Vec<String> = specs.iter().map(|s| s.kind().label().to_string()).collect();
        let learners: Vec<BaseLearnerModel> = specs
            .iter()
            .map(|s| fit_base_learner(s, &train, 7).unwrap())
            .collect();

        let mut columns = DMatrix::zeros(30, 3);
        for (j, l) in learners.iter().enumerate() {
            columns.set_column(j, &l.score_samples(&train).unwrap());
        }
        let raw = ScoreMatrix::raw(columns, ids.clone()).unwrap();
        let score_norm = fit_zscore(&raw).unwrap();
        let z = apply_zscore(&score_norm, &raw).unwrap();

        let config = OptimizerConfig {
            locality_enabled: true,
            locality_k: 4,
            ..Default::default()
        };
        let y = vec![1i8; 30];
        let (weights, _) =
            crate::fusion::optimize_interior_point(&z, &train, &y, &config).unwrap();

        let model = FusionModel::new(
            ids,
            learners,
            None,
            score_norm,
            weights,
            0.4,
            FusionMode::PureRpau,
            config,
        )
        .unwrap();
        (model, train)
    }

    #[test]
    fn roundtrip_is_bit_lossless() {
        let (model, probe) = tiny_model(3);
        let dir = std::env::temp_dir().join("locfuse_model_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        model.save(&path).unwrap();
        let loaded = FusionModel::load(&path).unwrap();

        // every stored float must survive to the last bit
        let a = model.weights().weights();
        let b = loaded.weights().weights();
        assert_eq!(a.nrows(), b.nrows());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in model
            .weights()
            .local_p()
            .iter()
            .zip(loaded.weights().local_p().iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in model
            .weights()
            .anchor_features()
            .iter()
            .zip(loaded.weights().anchor_features().iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(model.threshold().to_bits(), loaded.threshold().to_bits());

        // and the loaded model scores identically
        let s1 = model.score_features(&probe).unwrap();
        let s2 = loaded.score_features(&probe).unwrap();
        for (x, y) in s1.iter().zip(s2.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn version_mismatch_rejected() {
        let (model, _) = tiny_model(5);
        let dir = std::env::temp_dir().join("locfuse_model_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model_bad_version.json");
        model.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replace("\"format_version\":1", "\"format_version\":99");
        std::fs::write(&path, bumped).unwrap();
        assert!(FusionModel::load(&path).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn needs_two_learners() {
        let (model, _) = tiny_model(8);
        let one = FusionModel::new(
            vec!["a".into()],
            vec![model.learners[0].clone()],
            None,
            model.score_normalizer.clone(),
            model.weights.clone(),
            0.0,
            FusionMode::PureRpau,
            model.config,
        );
        assert!(one.is_err());
    }
}
