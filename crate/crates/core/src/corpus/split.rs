use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, LocalContext};

/// Deterministic context-level partition. Id lists are stored sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    /// Train fraction.
    pub ratio: f64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub valid_ids: Vec<String>,
}

impl SplitManifest {
    /// Ids of one named part: `train`, `test` or `valid`.
    pub fn part(&self, name: &str) -> Option<&[String]> {
        match name {
            "train" => Some(&self.train_ids),
            "test" => Some(&self.test_ids),
            "valid" | "validation" => Some(&self.valid_ids),
            _ => None,
        }
    }
}

fn check_ratio(r: f64) -> Result<(), CorpusError> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(CorpusError::InvalidRatio(r))
    }
}

fn shuffled_ids(contexts: &[LocalContext], seed: u64) -> Result<Vec<String>, CorpusError> {
    if contexts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut ids: Vec<String> = contexts.iter().map(|c| c.context_id.clone()).collect();
    ids.sort();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(ids)
}

fn share(n: usize, ratio: f64) -> usize {
    ((n as f64) * ratio).round() as usize
}

fn sorted(mut ids: Vec<String>) -> Vec<String> {
    ids.sort();
    ids
}

/// Shuffle context ids with `seed` and cut a `ratio` train fraction.
pub fn split(contexts: &[LocalContext], seed: u64, ratio: f64) -> Result<SplitManifest, CorpusError> {
    check_ratio(ratio)?;
    let mut ids = shuffled_ids(contexts, seed)?;
    let test = ids.split_off(share(ids.len(), ratio));
    Ok(SplitManifest {
        seed,
        ratio,
        train_ids: sorted(ids),
        test_ids: sorted(test),
        valid_ratio: None,
        valid_ids: Vec::new(),
    })
}

/// Three-way variant: `ratio` train, `valid_ratio` validation, rest test.
pub fn split_three(
    contexts: &[LocalContext],
    seed: u64,
    ratio: f64,
    valid_ratio: f64,
) -> Result<SplitManifest, CorpusError> {
    check_ratio(ratio)?;
    check_ratio(valid_ratio)?;
    if ratio + valid_ratio >= 1.0 {
        return Err(CorpusError::InvalidRatio(ratio + valid_ratio));
    }
    let mut ids = shuffled_ids(contexts, seed)?;
    let n = ids.len();
    let n_train = share(n, ratio);
    let n_valid = share(n, valid_ratio).min(n - n_train);
    let rest = ids.split_off(n_train);
    let (valid, test) = rest.split_at(n_valid);
    Ok(SplitManifest {
        seed,
        ratio,
        train_ids: sorted(ids),
        test_ids: sorted(test.to_vec()),
        valid_ratio: Some(valid_ratio),
        valid_ids: sorted(valid.to_vec()),
    })
}
