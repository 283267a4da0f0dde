//! Pure and non-pure split protocols.
//!
//! Normals are shuffled by seed and split 70/20/10 into train/validation/
//! test. Pure mode sends every anomaly to test. Non-pure mode first reserves
//! 20% of the anomalies (at least one) for test, then divides the remainder
//! evenly between train and validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::dataset::Dataset;

pub const TRAIN_FRACTION: f64 = 0.7;
pub const VALIDATION_FRACTION: f64 = 0.2;
pub const NONPURE_TEST_ANOMALY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Pure,
    NonPure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_splits(dataset: &Dataset, mode: SplitMode, seed: u64) -> Result<SplitPlan> {
    let mut normals: Vec<usize> = Vec::new();
    let mut anomalies: Vec<usize> = Vec::new();
    for (i, &y) in dataset.labels.iter().enumerate() {
        if y == 1 {
            normals.push(i);
        } else {
            anomalies.push(i);
        }
    }
    if normals.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} normals, need at least 10",
            normals.len()
        )));
    }
    if anomalies.is_empty() {
        return Err(Error::InsufficientData(
            "dataset has no anomalous samples for the test slice".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normals.shuffle(&mut rng);
    anomalies.shuffle(&mut rng);

    let n = normals.len();
    let n_train = (TRAIN_FRACTION * n as f64).floor() as usize;
    let n_val = (VALIDATION_FRACTION * n as f64).floor() as usize;
    let mut train: Vec<usize> = normals[..n_train].to_vec();
    let mut validation: Vec<usize> = normals[n_train..n_train + n_val].to_vec();
    let mut test: Vec<usize> = normals[n_train + n_val..].to_vec();

    match mode {
        SplitMode::Pure => {
            test.extend_from_slice(&anomalies);
        }
        SplitMode::NonPure => {
            let a = anomalies.len();
            let reserved = ((NONPURE_TEST_ANOMALY_FRACTION * a as f64).floor() as usize).max(1);
            let remainder = a - reserved;
            let to_train = remainder / 2;
            test.extend_from_slice(&anomalies[..reserved]);
            train.extend_from_slice(&anomalies[reserved..reserved + to_train]);
            validation.extend_from_slice(&anomalies[reserved + to_train..]);
        }
    }

    Ok(SplitPlan {
        mode,
        seed,
        train,
        validation,
        test,
    })
}
