//! Optional JSON config supplying defaults for subcommand flags.
//! Precedence: command-line flag, then config file, then built-in default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::manifest::read_to_string;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_RATIO: f64 = 0.8;
pub const DEFAULT_TOPK: usize = 10;
pub const MAX_K: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub ratio: Option<f64>,
    pub valid_ratio: Option<f64>,
    pub scheme: Option<String>,
    pub vocab: Option<PathBuf>,
    pub total_limit: Option<usize>,
    pub context_limit: Option<usize>,
    pub side_window: Option<usize>,
    pub abstract_limit: Option<usize>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub topk: Option<usize>,
    /// Cut-offs used by `evaluate` and `hallucinate` when `--k` is absent.
    pub k_values: Option<Vec<usize>>,
    pub bootstrap: Option<usize>,
    pub confidence: Option<f64>,
    pub denominator: Option<String>,
    pub system: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(ks) = &self.k_values {
            if ks.is_empty() {
                return Err(CliError::Validation("k_values is empty".into()));
            }
            for &k in ks {
                check_k(k)?;
            }
        }
        if let Some(k) = self.topk {
            check_k(k)?;
        }
        if let Some(path) = &self.vocab {
            if !path.exists() {
                return Err(CliError::Validation(format!("vocab file {} does not exist", path.display())));
            }
        }
        Ok(())
    }
}

pub fn check_k(k: usize) -> Result<usize, CliError> {
    if (1..=MAX_K).contains(&k) {
        Ok(k)
    } else {
        Err(CliError::Validation(format!("k must lie in 1..={MAX_K}, got {k}")))
    }
}
