//! Ranking metrics over prediction files: Recall@k, exact match and MRR.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citegrammar::{parse, CitationToken, NormalizedKey};

/// Top-k generated citations for one context, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub context_id: String,
    pub predictions: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no ground truth for context {context_id}")]
    MissingGroundTruth { context_id: String },
    #[error("context {context_id} has {found} predictions, expected at least {k}")]
    InconsistentK { context_id: String, k: usize, found: usize },
    #[error("context {0} appears more than once")]
    DuplicateContext(String),
    #[error("k must be positive")]
    ZeroK,
    #[error("no prediction records")]
    Empty,
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
}

/// Parsed keys of the first `k` predictions; `None` for unparseable strings.
pub fn prediction_keys(predictions: &[String], k: usize) -> Vec<Option<NormalizedKey>> {
    predictions.iter().take(k).map(|p| parse(p).ok().map(|t| t.key())).collect()
}

/// 1-based rank of the first prediction matching `gt` within the first `k`.
pub fn rank_of(predictions: &[String], gt: &NormalizedKey, k: usize) -> Option<usize> {
    prediction_keys(predictions, k)
        .iter()
        .position(|p| p.as_ref() == Some(gt))
        .map(|i| i + 1)
}

/// Check shape and ground-truth coverage of a prediction set.
pub fn validate(preds: &[PredictionRecord], gts: &HashMap<String, CitationToken>, k: usize) -> Result<(), EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut seen = HashSet::with_capacity(preds.len());
    for rec in preds {
        if !seen.insert(rec.context_id.as_str()) {
            return Err(EvalError::DuplicateContext(rec.context_id.clone()));
        }
        if !gts.contains_key(&rec.context_id) {
            return Err(EvalError::MissingGroundTruth {
                context_id: rec.context_id.clone(),
            });
        }
        if rec.predictions.len() < k {
            return Err(EvalError::InconsistentK {
                context_id: rec.context_id.clone(),
                k,
                found: rec.predictions.len(),
            });
        }
    }
    Ok(())
}

/// Per-context ranks keyed by context id. Lists longer than `k` are cut to `k`.
pub fn ranks(
    preds: &[PredictionRecord],
    gts: &HashMap<String, CitationToken>,
    k: usize,
) -> Result<BTreeMap<String, Option<usize>>, EvalError> {
    validate(preds, gts, k)?;
    Ok(preds
        .par_iter()
        .map(|rec| {
            let gt = gts[&rec.context_id].key();
            (rec.context_id.clone(), rank_of(&rec.predictions, &gt, k))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub n: usize,
    pub k: usize,
    pub recall_at_k: f64,
    pub exact_match: f64,
    pub mrr: f64,
    /// Exact MRR as a reduced fraction `p/q`.
    pub mrr_exact: String,
    pub hits: usize,
    pub exact_hits: usize,
    /// rank → number of contexts whose ground truth sits at that rank.
    pub rank_histogram: BTreeMap<usize, usize>,
    pub per_context_ranks: BTreeMap<String, Option<usize>>,
}

fn ratio(num: BigInt, den: usize) -> BigRational {
    BigRational::new(num, BigInt::from(den))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl EvalReport {
    pub fn from_ranks(per_context_ranks: BTreeMap<String, Option<usize>>, k: usize) -> Self {
        let mut rank_histogram = BTreeMap::new();
        for r in per_context_ranks.values().flatten() {
            *rank_histogram.entry(*r).or_insert(0) += 1;
        }
        let mut report = Self {
            system: None,
            dataset: None,
            n: per_context_ranks.len(),
            k,
            recall_at_k: 0.0,
            exact_match: 0.0,
            mrr: 0.0,
            mrr_exact: String::new(),
            hits: rank_histogram.values().sum(),
            exact_hits: rank_histogram.get(&1).copied().unwrap_or(0),
            rank_histogram,
            per_context_ranks,
        };
        report.recall_at_k = to_f64(&report.recall_exact());
        report.exact_match = to_f64(&report.exact_match_exact());
        let mrr = report.mrr_rational();
        report.mrr = to_f64(&mrr);
        report.mrr_exact = mrr.to_string();
        report
    }

    pub fn recall_exact(&self) -> BigRational {
        self.recall_at(self.k)
    }

    /// Recall at a cut-off `j ≤ k`, from the rank histogram.
    pub fn recall_at(&self, j: usize) -> BigRational {
        let hits: usize = self.rank_histogram.range(..=j).map(|(_, c)| c).sum();
        ratio(hits.into(), self.n)
    }

    pub fn exact_match_exact(&self) -> BigRational {
        ratio(self.exact_hits.into(), self.n)
    }

    pub fn mrr_rational(&self) -> BigRational {
        self.mrr_at(self.k)
    }

    /// MRR counting only ranks `≤ j`.
    pub fn mrr_at(&self, j: usize) -> BigRational {
        let sum = self
            .rank_histogram
            .range(..=j)
            .fold(BigRational::zero(), |acc, (&r, &c)| acc + ratio(c.into(), r));
        sum / BigRational::from_integer(self.n.into())
    }

    pub fn labelled(mut self, system: Option<String>, dataset: Option<String>) -> Self {
        self.system = system;
        self.dataset = dataset;
        self
    }
}

pub fn evaluate(
    preds: &[PredictionRecord],
    gts: &HashMap<String, CitationToken>,
    k: usize,
) -> Result<EvalReport, EvalError> {
    Ok(EvalReport::from_ranks(ranks(preds, gts, k)?, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub recall: f64,
    pub exact_match: f64,
    pub mrr: f64,
}

fn sample_metrics(ranks: &[Option<usize>], picks: impl Iterator<Item = usize>) -> MetricSample {
    let (mut hits, mut exact, mut rr) = (0usize, 0usize, 0.0);
    for i in picks {
        if let Some(r) = ranks[i] {
            hits += 1;
            exact += usize::from(r == 1);
            rr += 1.0 / r as f64;
        }
    }
    let n = ranks.len() as f64;
    MetricSample {
        recall: hits as f64 / n,
        exact_match: exact as f64 / n,
        mrr: rr / n,
    }
}

/// Metrics of `resamples` bootstrap replicates drawn with replacement.
pub fn bootstrap_samples(ranks: &[Option<usize>], resamples: usize, seed: u64) -> Result<Vec<MetricSample>, EvalError> {
    if resamples < 100 {
        return Err(EvalError::TooFewResamples(resamples));
    }
    if ranks.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ranks.len();
    Ok((0..resamples)
        .map(|_| {
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            sample_metrics(ranks, picks.into_iter())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub resamples: usize,
    pub seed: u64,
    pub confidence: f64,
    pub recall_at_k: Interval,
    pub exact_match: Interval,
    pub mrr: Interval,
}

fn percentile_interval(mut values: Vec<f64>, estimate: f64, confidence: f64) -> Interval {
    values.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    let last = values.len() - 1;
    let at = |q: f64| values[((q * last as f64).round() as usize).min(last)];
    Interval {
        estimate,
        lower: at(alpha),
        upper: at(1.0 - alpha),
    }
}

/// Percentile bootstrap over contexts.
pub fn bootstrap_ci(report: &EvalReport, resamples: usize, seed: u64, confidence: f64) -> Result<BootstrapCi, EvalError> {
    let ranks: Vec<Option<usize>> = report.per_context_ranks.values().copied().collect();
    let samples = bootstrap_samples(&ranks, resamples, seed)?;
    let pick = |f: fn(&MetricSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    Ok(BootstrapCi {
        resamples,
        seed,
        confidence,
        recall_at_k: percentile_interval(pick(|s| s.recall), report.recall_at_k, confidence),
        exact_match: percentile_interval(pick(|s| s.exact_match), report.exact_match, confidence),
        mrr: percentile_interval(pick(|s| s.mrr), report.mrr, confidence),
    })
}
