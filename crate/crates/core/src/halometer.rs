//! Hallucination taxonomy and the macro/micro hallucination rate family.
//!
//! Each predicted string gets exactly one label by a fixed cascade:
//! wrong format, in pool, all names of the ground truth (year differs), one
//! name of the ground truth, year of the ground truth, other.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citegrammar::{overlap, parse, CitationToken};
use crate::corpus::CitationPool;
use crate::evalcore::{validate, EvalError, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HallucinationLabel {
    InPool,
    WrongFormat,
    AllNamesGt,
    OneNameGt,
    YearGt,
    OtherHal,
}

impl HallucinationLabel {
    pub const ALL: [Self; 6] = [
        Self::InPool,
        Self::WrongFormat,
        Self::AllNamesGt,
        Self::OneNameGt,
        Self::YearGt,
        Self::OtherHal,
    ];

    pub fn is_hallucination(self) -> bool {
        self != Self::InPool
    }

    /// Partially correct classes.
    pub fn is_partial(self) -> bool {
        matches!(self, Self::AllNamesGt | Self::OneNameGt | Self::YearGt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::InPool => "in_pool",
            Self::WrongFormat => "wrong_format",
            Self::AllNamesGt => "all_names_gt",
            Self::OneNameGt => "one_name_gt",
            Self::YearGt => "year_gt",
            Self::OtherHal => "other_hal",
        }
    }
}

impl fmt::Display for HallucinationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify(pred: &str, gt: &CitationToken, pool: &CitationPool) -> HallucinationLabel {
    let Ok(token) = parse(pred) else {
        return HallucinationLabel::WrongFormat;
    };
    if pool.contains_token(&token) {
        return HallucinationLabel::InPool;
    }
    let o = overlap(&token, gt);
    if o.all_names && !o.year {
        HallucinationLabel::AllNamesGt
    } else if o.one_name {
        HallucinationLabel::OneNameGt
    } else if o.year {
        HallucinationLabel::YearGt
    } else {
        HallucinationLabel::OtherHal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub in_pool: u64,
    pub wrong_format: u64,
    pub all_names_gt: u64,
    pub one_name_gt: u64,
    pub year_gt: u64,
    pub other_hal: u64,
}

impl LabelCounts {
    pub fn add(&mut self, label: HallucinationLabel) {
        *self.slot(label) += 1;
    }

    fn slot(&mut self, label: HallucinationLabel) -> &mut u64 {
        match label {
            HallucinationLabel::InPool => &mut self.in_pool,
            HallucinationLabel::WrongFormat => &mut self.wrong_format,
            HallucinationLabel::AllNamesGt => &mut self.all_names_gt,
            HallucinationLabel::OneNameGt => &mut self.one_name_gt,
            HallucinationLabel::YearGt => &mut self.year_gt,
            HallucinationLabel::OtherHal => &mut self.other_hal,
        }
    }

    pub fn get(&self, label: HallucinationLabel) -> u64 {
        match label {
            HallucinationLabel::InPool => self.in_pool,
            HallucinationLabel::WrongFormat => self.wrong_format,
            HallucinationLabel::AllNamesGt => self.all_names_gt,
            HallucinationLabel::OneNameGt => self.one_name_gt,
            HallucinationLabel::YearGt => self.year_gt,
            HallucinationLabel::OtherHal => self.other_hal,
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        for l in HallucinationLabel::ALL {
            *self.slot(l) += other.get(l);
        }
        self
    }

    pub fn total(&self) -> u64 {
        HallucinationLabel::ALL.iter().map(|&l| self.get(l)).sum()
    }

    pub fn hallucinated(&self) -> u64 {
        self.total() - self.in_pool
    }

    pub fn partial(&self) -> u64 {
        self.all_names_gt + self.one_name_gt + self.year_gt
    }
}

/// Labels of the first `k` predictions of one record.
pub fn label_record(preds: &[String], k: usize, gt: &CitationToken, pool: &CitationPool) -> Vec<HallucinationLabel> {
    preds.iter().take(k).map(|p| classify(p, gt, pool)).collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HaloError {
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Denominator used for the conditioned rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionedDenominator {
    /// k times the number of qualifying contexts.
    #[default]
    Qualifying,
    /// k times all contexts.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// The ground truth appears somewhere in the top k.
    TopKMatch,
    /// The ground truth is the first prediction.
    ExactMatch,
}

/// Per-context outcome: labels plus the rank of the ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextLabels {
    pub context_id: String,
    pub labels: Vec<HallucinationLabel>,
    pub rank: Option<usize>,
}

impl ContextLabels {
    pub fn hallucinated(&self) -> usize {
        self.labels.iter().filter(|l| l.is_hallucination()).count()
    }

    fn qualifies(&self, condition: Condition) -> bool {
        match condition {
            Condition::TopKMatch => self.rank.is_some(),
            Condition::ExactMatch => self.rank == Some(1),
        }
    }
}

/// Label every record. Checks the same preconditions as ranking evaluation.
pub fn label_all(
    preds: &[PredictionRecord],
    gts: &HashMap<String, CitationToken>,
    pool: &CitationPool,
    k: usize,
) -> Result<Vec<ContextLabels>, HaloError> {
    validate(preds, gts, k)?;
    let mut out: Vec<ContextLabels> = preds
        .par_iter()
        .map(|rec| {
            let gt = &gts[&rec.context_id];
            let gt_key = gt.key();
            let rank = rec
                .predictions
                .iter()
                .take(k)
                .position(|p| parse(p).is_ok_and(|t| t.key() == gt_key))
                .map(|i| i + 1);
            ContextLabels {
                context_id: rec.context_id.clone(),
                labels: label_record(&rec.predictions, k, gt, pool),
                rank,
            }
        })
        .collect();
    out.sort_by(|a, b| a.context_id.cmp(&b.context_id));
    Ok(out)
}

fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn f64_of(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rates over `k·n` positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactRates {
    pub mahr: BigRational,
    pub mihr: BigRational,
    pub partial: BigRational,
    pub per_label: [BigRational; 6],
}

impl ExactRates {
    pub fn rate(&self, label: HallucinationLabel) -> &BigRational {
        &self.per_label[HallucinationLabel::ALL.iter().position(|&l| l == label).unwrap()]
    }

    /// Partial rate equals the sum of its three class rates.
    pub fn partial_identity_holds(&self) -> bool {
        self.partial
            == self.rate(HallucinationLabel::AllNamesGt)
                + self.rate(HallucinationLabel::OneNameGt)
                + self.rate(HallucinationLabel::YearGt)
    }

    /// MaHR equals partial plus wrong-format plus other.
    pub fn decomposition_holds(&self) -> bool {
        self.mahr
            == &self.partial + self.rate(HallucinationLabel::WrongFormat) + self.rate(HallucinationLabel::OtherHal)
    }

    pub fn macro_equals_micro(&self) -> bool {
        self.mahr == self.mihr
    }
}

/// MaHR from aggregated counts.
pub fn mahr_exact(counts: &LabelCounts, k: usize, n: usize) -> BigRational {
    rational(counts.hallucinated(), (k * n) as u64)
}

/// MiHR: the mean of per-context hallucination fractions.
pub fn mihr_exact(contexts: &[ContextLabels], k: usize) -> BigRational {
    if contexts.is_empty() {
        return BigRational::zero();
    }
    let sum = contexts
        .iter()
        .fold(BigRational::zero(), |acc, c| acc + rational(c.hallucinated() as u64, k as u64));
    sum / BigRational::from_integer(BigInt::from(contexts.len()))
}

pub fn exact_rates(contexts: &[ContextLabels], k: usize) -> ExactRates {
    let counts = count_labels(contexts);
    let den = (k * contexts.len()) as u64;
    let per_label = HallucinationLabel::ALL.map(|l| rational(counts.get(l), den));
    ExactRates {
        mahr: mahr_exact(&counts, k, contexts.len()),
        mihr: mihr_exact(contexts, k),
        partial: rational(counts.partial(), den),
        per_label,
    }
}

pub fn count_labels(contexts: &[ContextLabels]) -> LabelCounts {
    contexts
        .par_iter()
        .map(|c| {
            let mut counts = LabelCounts::default();
            c.labels.iter().for_each(|&l| counts.add(l));
            counts
        })
        .reduce(LabelCounts::default, LabelCounts::merge)
}

/// Exact conditioned rate, or `None` when no context qualifies.
pub fn conditioned_exact(
    contexts: &[ContextLabels],
    k: usize,
    condition: Condition,
    denominator: ConditionedDenominator,
) -> Option<BigRational> {
    let qualifying: Vec<&ContextLabels> = contexts.iter().filter(|c| c.qualifies(condition)).collect();
    if qualifying.is_empty() {
        return None;
    }
    let halluc: u64 = qualifying.iter().map(|c| c.hallucinated() as u64).sum();
    let n = match denominator {
        ConditionedDenominator::Qualifying => qualifying.len(),
        ConditionedDenominator::All => contexts.len(),
    };
    Some(rational(halluc, (k * n) as u64))
}

pub fn conditioned_mahr(
    preds: &[PredictionRecord],
    gts: &HashMap<String, CitationToken>,
    pool: &CitationPool,
    k: usize,
    condition: Condition,
    denominator: ConditionedDenominator,
) -> Result<Option<f64>, HaloError> {
    let contexts = label_all(preds, gts, pool, k)?;
    Ok(conditioned_exact(&contexts, k, condition, denominator).map(|r| f64_of(&r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityChecks {
    pub partial_sum: bool,
    pub decomposition: bool,
    pub macro_equals_micro: bool,
}

impl IdentityChecks {
    pub fn all_hold(&self) -> bool {
        self.partial_sum && self.decomposition && self.macro_equals_micro
    }
}

/// Rates in percent, rounded for presentation only by the report layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentages {
    pub mahr: f64,
    pub mahr_partial: f64,
    pub all_names_gt: f64,
    pub one_name_gt: f64,
    pub year_gt: f64,
    pub wrong_format: f64,
    pub other_hal: f64,
    pub topk_match_mahr: Option<f64>,
    pub exact_match_mahr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationBreakdown {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub k: usize,
    pub n: usize,
    pub counts: LabelCounts,
    pub mahr: f64,
    pub mihr: f64,
    pub mahr_partial: f64,
    pub all_names_gt_rate: f64,
    pub one_name_gt_rate: f64,
    pub year_gt_rate: f64,
    pub wrong_format_rate: f64,
    pub other_hal_rate: f64,
    pub topk_match_mahr: Option<f64>,
    pub exact_match_mahr: Option<f64>,
    pub topk_match_contexts: usize,
    pub exact_match_contexts: usize,
    pub conditioned_denominator: ConditionedDenominator,
    pub identities: IdentityChecks,
    pub percent: Percentages,
}

impl HallucinationBreakdown {
    pub fn from_contexts(contexts: &[ContextLabels], k: usize, denominator: ConditionedDenominator) -> Self {
        let counts = count_labels(contexts);
        let exact = exact_rates(contexts, k);
        let rate = |l| f64_of(exact.rate(l));
        let topk = conditioned_exact(contexts, k, Condition::TopKMatch, denominator).map(|r| f64_of(&r));
        let em = conditioned_exact(contexts, k, Condition::ExactMatch, denominator).map(|r| f64_of(&r));
        let identities = IdentityChecks {
            partial_sum: exact.partial_identity_holds(),
            decomposition: exact.decomposition_holds(),
            macro_equals_micro: exact.macro_equals_micro(),
        };
        let pct = |x: f64| x * 100.0;
        let mahr = f64_of(&exact.mahr);
        let mahr_partial = f64_of(&exact.partial);
        Self {
            system: None,
            dataset: None,
            k,
            n: contexts.len(),
            counts,
            mahr,
            mihr: f64_of(&exact.mihr),
            mahr_partial,
            all_names_gt_rate: rate(HallucinationLabel::AllNamesGt),
            one_name_gt_rate: rate(HallucinationLabel::OneNameGt),
            year_gt_rate: rate(HallucinationLabel::YearGt),
            wrong_format_rate: rate(HallucinationLabel::WrongFormat),
            other_hal_rate: rate(HallucinationLabel::OtherHal),
            topk_match_mahr: topk,
            exact_match_mahr: em,
            topk_match_contexts: contexts.iter().filter(|c| c.qualifies(Condition::TopKMatch)).count(),
            exact_match_contexts: contexts.iter().filter(|c| c.qualifies(Condition::ExactMatch)).count(),
            conditioned_denominator: denominator,
            identities,
            percent: Percentages {
                mahr: pct(mahr),
                mahr_partial: pct(mahr_partial),
                all_names_gt: pct(rate(HallucinationLabel::AllNamesGt)),
                one_name_gt: pct(rate(HallucinationLabel::OneNameGt)),
                year_gt: pct(rate(HallucinationLabel::YearGt)),
                wrong_format: pct(rate(HallucinationLabel::WrongFormat)),
                other_hal: pct(rate(HallucinationLabel::OtherHal)),
                topk_match_mahr: topk.map(pct),
                exact_match_mahr: em.map(pct),
            },
        }
    }

    pub fn labelled(mut self, system: Option<String>, dataset: Option<String>) -> Self {
        self.system = system;
        self.dataset = dataset;
        self
    }
}

pub fn analyze(
    preds: &[PredictionRecord],
    gts: &HashMap<String, CitationToken>,
    pool: &CitationPool,
    k: usize,
    denominator: ConditionedDenominator,
) -> Result<HallucinationBreakdown, HaloError> {
    let contexts = label_all(preds, gts, pool, k)?;
    Ok(HallucinationBreakdown::from_contexts(&contexts, k, denominator))
}
