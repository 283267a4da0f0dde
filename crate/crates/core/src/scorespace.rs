//! Score standardization and normalization.
//!
//! Raw learner scores move through a fixed pipeline: raw -> z-scored ->
//! trimmed min-max normalized. Statistics are always fitted on training
//! scores and reused downstream. This module also synthesizes pseudo-negative
//! validation samples by negating standardized score profiles.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum standard deviation kept by the z-score stage.
pub const STD_FLOOR: f64 = 1e-12;

/// Minimum quantile gap before a column collapses to the constant 0.5.
pub const QUANTILE_GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Raw,
    ZScored,
    Normalized,
}

/// An n x d matrix of scores; row i holds the d learner scores of sample i.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMatrix {
    values: DMatrix<f64>,
    learner_ids: Vec<String>,
    stage: Stage,
}

impl ScoreMatrix {
    pub fn new(values: DMatrix<f64>, learner_ids: Vec<String>, stage: Stage) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(
                "score matrix must have at least one row and one column".into(),
            ));
        }
        if learner_ids.len() != values.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} learner ids for {} columns",
                learner_ids.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite score entry".into()));
        }
        Ok(Self {
            values,
            learner_ids,
            stage,
        })
    }

    pub fn raw(values: DMatrix<f64>, learner_ids: Vec<String>) -> Result<Self> {
        Self::new(values, learner_ids, Stage::Raw)
    }

    /// Wrap a single score column (e.g. fused outputs) for normalization.
    pub fn single_column(id: &str, values: DVector<f64>) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(values.len(), 1, values.as_slice()),
            vec![id.to_string()],
            Stage::Raw,
        )
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn learner_ids(&self) -> &[String] {
        &self.learner_ids
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// First column as a vector; handy for single-column matrices.
    pub fn column_vector(&self, j: usize) -> DVector<f64> {
        self.values.column(j).into_owned()
    }
}

/// Per-column statistics for the two normalization stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizerState {
    means: Vec<f64>,
    stds: Vec<f64>,
    trim: Option<TrimQuantiles>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrimQuantiles {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rho: u32,
}

impl NormalizerState {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn rho(&self) -> Option<u32> {
        self.trim.as_ref().map(|t| t.rho)
    }

    pub fn trim_quantiles(&self) -> Option<(&[f64], &[f64])> {
        self.trim
            .as_ref()
            .map(|t| (t.lower.as_slice(), t.upper.as_slice()))
    }
}

/// Fit per-column mean and population standard deviation on raw training
/// scores. Stds below the floor are replaced by it.
pub fn fit_zscore(s_train: &ScoreMatrix) -> Result<NormalizerState> {
    if s_train.stage() != Stage::Raw {
        return Err(Error::InvalidInput(
            "z-score statistics are fitted on raw scores".into(),
        ));
    }
    let n = s_train.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "z-score fit needs at least 2 rows, got {n}"
        )));
    }
    let values = s_train.values();
    let mut means = Vec::with_capacity(values.ncols());
    let mut stds = Vec::with_capacity(values.ncols());
    for j in 0..values.ncols() {
        let col = values.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        means.push(mean);
        stds.push(var.sqrt().max(STD_FLOOR));
    }
    Ok(NormalizerState {
        means,
        stds,
        trim: None,
    })
}

/// Standardize with training statistics: (v - mean_j) / std_j.
pub fn apply_zscore(state: &NormalizerState, s: &ScoreMatrix) -> Result<ScoreMatrix> {
    if s.stage() != Stage::Raw {
        return Err(Error::InvalidInput("apply_zscore expects raw scores".into()));
    }
    if s.ncols() != state.means.len() {
        return Err(Error::InvalidInput(format!(
            "column count mismatch: {} scores vs {} fitted columns",
            s.ncols(),
            state.means.len()
        )));
    }
    let mut values = s.values().clone();
    for j in 0..values.ncols() {
        let (m, sd) = (state.means[j], state.stds[j]);
        for v in values.column_mut(j).iter_mut() {
            *v = (*v - m) / sd;
        }
    }
    ScoreMatrix::new(values, s.learner_ids().to_vec(), Stage::ZScored)
}

/// Fit the two-sided trim quantiles (percentiles rho and 100 - rho) on
/// z-scored training scores. rho must lie in 1..=10.
pub fn fit_trim_quantiles(
    state: &mut NormalizerState,
    s_train: &ScoreMatrix,
    rho: u32,
) -> Result<()> {
    if s_train.stage() != Stage::ZScored {
        return Err(Error::InvalidInput(
            "trim quantiles are fitted on z-scored scores".into(),
        ));
    }
    if !(1..=10).contains(&rho) {
        return Err(Error::InvalidInput(format!("rho must be in 1..=10, got {rho}")));
    }
    if s_train.ncols() != state.means.len() {
        return Err(Error::InvalidInput("column count mismatch".into()));
    }
    let values = s_train.values();
    let mut lower = Vec::with_capacity(values.ncols());
    let mut upper = Vec::with_capacity(values.ncols());
    for j in 0..values.ncols() {
        let mut col: Vec<f64> = values.column(j).iter().copied().collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower.push(percentile_sorted(&col, rho as f64));
        upper.push(percentile_sorted(&col, 100.0 - rho as f64));
    }
    state.trim = Some(TrimQuantiles { lower, upper, rho });
    Ok(())
}

/// Two-sided trimmed min-max: clamp((v - q_lo) / (q_hi - q_lo), 0, 1).
/// Columns whose quantile gap collapses map to the constant 0.5.
pub fn trimmed_minmax(state: &NormalizerState, s: &ScoreMatrix) -> Result<ScoreMatrix> {
    if s.stage() != Stage::ZScored {
        return Err(Error::InvalidInput(
            "trimmed min-max expects z-scored scores".into(),
        ));
    }
    let trim = state
        .trim
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("trim quantiles not fitted".into()))?;
    if s.ncols() != trim.lower.len() {
        return Err(Error::InvalidInput("column count mismatch".into()));
    }
    let mut values = s.values().clone();
    for j in 0..values.ncols() {
        let (lo, hi) = (trim.lower[j], trim.upper[j]);
        let gap = hi - lo;
        for v in values.column_mut(j).iter_mut() {
            *v = if gap < QUANTILE_GAP_FLOOR {
                0.5
            } else {
                ((*v - lo) / gap).clamp(0.0, 1.0)
            };
        }
    }
    ScoreMatrix::new(values, s.learner_ids().to_vec(), Stage::Normalized)
}

/// Linear-interpolation percentile of a sorted slice, p in [0, 100].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Append negated copies of ceil(fraction * n) seed-selected validation rows.
/// Originals keep label +1, mirrored rows get -1; selection is reproducible.
/// The third element lists each mirrored row's source index, in append order.
pub fn generate_pseudo_negatives(
    s_val: &ScoreMatrix,
    fraction: f64,
    seed: u64,
) -> Result<(ScoreMatrix, Vec<i8>, Vec<usize>)> {
    if s_val.stage() != Stage::ZScored {
        return Err(Error::InvalidInput(
            "pseudo-negatives are generated in z-scored space".into(),
        ));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = s_val.nrows();
    if n == 0 {
        return Err(Error::InsufficientData("empty validation matrix".into()));
    }
    let count = (fraction * n as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut selected: Vec<usize> = indices.into_iter().take(count).collect();
    selected.sort_unstable();

    let d = s_val.ncols();
    let mut values = DMatrix::zeros(n + count, d);
    values.view_mut((0, 0), (n, d)).copy_from(s_val.values());
    let mut labels = vec![1i8; n + count];
    for (k, &idx) in selected.iter().enumerate() {
        for j in 0..d {
            values[(n + k, j)] = -s_val.values()[(idx, j)];
        }
        labels[n + k] = -1;
    }
    let out = ScoreMatrix::new(values, s_val.learner_ids().to_vec(), Stage::ZScored)?;
    Ok((out, labels, selected))
}
