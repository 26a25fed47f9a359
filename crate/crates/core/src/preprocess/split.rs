use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<String>,
    /// Empty for the default two-way split, where validation is the test split.
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub fraction: f64,
    pub seed: u64,
}

impl DatasetSplit {
    /// Ids used for per-epoch validation: `val_ids` if present, else `test_ids`.
    pub fn validation_ids(&self) -> &[String] {
        if self.val_ids.is_empty() {
            &self.test_ids
        } else {
            &self.val_ids
        }
    }
}

/// Number of training examples: `round(fraction * n)`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round() as usize
}

/// Seeded uniform shuffle of `ids`, then cut at `round(fraction * n)`.
pub fn split(ids: &[String], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if ids.len() < 2 {
        return Err(Error::TooFewExamples(ids.len()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_ids = shuffled.split_off(train_size(ids.len(), fraction));
    Ok(DatasetSplit {
        train_ids: shuffled,
        val_ids: Vec::new(),
        test_ids,
        fraction,
        seed,
    })
}

/// Two-way split followed by carving `val_fraction` of the training part into a validation set.
pub fn split_three(ids: &[String], fraction: f64, val_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    let mut s = split(ids, fraction, seed)?;
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Config(format!("validation fraction {val_fraction} outside (0, 1)")));
    }
    if s.train_ids.len() < 2 {
        return Err(Error::TooFewExamples(s.train_ids.len()));
    }
    let keep = s.train_ids.len() - train_size(s.train_ids.len(), val_fraction);
    s.val_ids = s.train_ids.split_off(keep);
    Ok(s)
}
