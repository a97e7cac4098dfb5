//! Generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use citeharness_core::citegrammar::parse;
use citeharness_core::corpus::{Dataset, LocalContext, PaperMeta, RejectReason, RepairKind};
use citeharness_core::evalcore::PredictionRecord;
use citeharness_core::jsonl::RawLine;
use citeharness_core::CitationToken;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const SURNAMES: [&str; 24] = [
    "Och", "Ney", "Chiang", "Koehn", "Talbot", "Brants", "Klein", "Manning", "Collins", "Charniak", "Petrović",
    "Müller", "O'Connor", "Valenzuela-Escárcega", "De Marneffe", "Nivre", "Pauls", "Yao", "Zweig", "Søgaard",
    "Ait-Mokhtar", "Chanod", "Weinreich", "McDonald",
];

/// ASCII lookalike of a surname, or `None` when it is already plain.
pub fn plain(name: &str) -> Option<&'static str> {
    match name {
        "Petrović" => Some("Petrovic"),
        "Müller" => Some("Muller"),
        "Valenzuela-Escárcega" => Some("Valenzuela-Escarcega"),
        "Søgaard" => Some("Sogaard"),
        _ => None,
    }
}

pub const ACCENTED: [&str; 4] = ["Petrović", "Müller", "Valenzuela-Escárcega", "Søgaard"];

const WORDS: [&str; 24] = [
    "we", "use", "the", "model", "of", "translation", "for", "parsing", "with", "a", "neural", "corpus", "and",
    "alignment", "phrase", "based", "results", "show", "that", "in", "lexical", "semantic", "tree", "grammar",
];

pub fn words(r: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_citation(r: &mut impl Rng) -> String {
    let year = r.random_range(1990..2024);
    let a = *SURNAMES.choose(r).unwrap();
    match r.random_range(0..3) {
        0 => format!("{a}, {year}"),
        1 => {
            let mut b = *SURNAMES.choose(r).unwrap();
            while b == a {
                b = SURNAMES.choose(r).unwrap();
            }
            format!("{a} and {b}, {year}")
        }
        _ => format!("{a} et al., {year}"),
    }
}

pub fn tok(s: &str) -> CitationToken {
    parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

// ------------------------------------------------------------ prediction files

/// A random prediction file plus, per context, which positions were planted
/// as matches of the ground truth.
pub struct PlantedPredictions {
    pub preds: Vec<PredictionRecord>,
    pub gts: HashMap<String, CitationToken>,
    pub matches: BTreeMap<String, Vec<bool>>,
    pub k: usize,
}

/// Strings that never match the ground truth: other citations that differ
/// by year, and malformed strings.
fn decoy(r: &mut impl Rng, gt: &CitationToken) -> String {
    match r.random_range(0..4) {
        0 => format!("({} {})", gt.lead_surname(), gt.year),
        1 => {
            let mut t = gt.clone();
            t.year = if gt.year == 2023 { 1990 } else { gt.year + 1 };
            CitationToken::new(t.surnames, t.et_al, t.year).unwrap().canonical()
        }
        _ => loop {
            let c = random_citation(r);
            if tok(&c).key() != gt.key() {
                break c;
            }
        },
    }
}

/// A string equal to the ground truth up to normalization.
fn variant(r: &mut impl Rng, gt: &CitationToken) -> String {
    let surnames: Vec<String> = gt
        .surnames
        .iter()
        .map(|s| match (plain(s), r.random_bool(0.5)) {
            (Some(p), true) => p.to_owned(),
            _ => s.clone(),
        })
        .collect();
    CitationToken::new(surnames, gt.et_al, gt.year).unwrap().canonical()
}

pub fn planted_predictions(r: &mut impl Rng, n: usize, k: usize) -> PlantedPredictions {
    let mut out = PlantedPredictions {
        preds: Vec::with_capacity(n),
        gts: HashMap::new(),
        matches: BTreeMap::new(),
        k,
    };
    for i in 0..n {
        let id = format!("ctx{i:04}");
        let gt = tok(&random_citation(r));
        let mut flags = Vec::with_capacity(k);
        let predictions = (0..k)
            .map(|_| {
                let hit = r.random_bool(0.2);
                flags.push(hit);
                if hit {
                    variant(r, &gt)
                } else {
                    decoy(r, &gt)
                }
            })
            .collect();
        out.preds.push(PredictionRecord { context_id: id.clone(), predictions });
        out.gts.insert(id.clone(), gt);
        out.matches.insert(id, flags);
    }
    out
}

// ------------------------------------------------------------ planted corpus

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    Clean,
    SurfaceDiacritic,
    ContextDiacritic,
    SwappedPair,
    SwappedPairDiacritic,
    EmptyAuthor,
    OtherCitations,
    YearConflict,
    Malformed,
    DuplicateId,
}

pub struct PlantedCorpus {
    pub lines: Vec<RawLine>,
    pub defects: BTreeMap<String, Vec<Defect>>,
    /// Expected reject reason per planted record (by line number).
    pub expected_rejects: Vec<RejectReason>,
    pub expected_repairs: BTreeMap<String, Vec<RepairKind>>,
    pub expected_kept: usize,
}

fn line(n: usize, value: serde_json::Value) -> RawLine {
    RawLine { line: n, bytes: value.to_string().into_bytes() }
}

fn plain_two(r: &mut impl Rng) -> (String, String) {
    let plains: Vec<&str> = SURNAMES.iter().copied().filter(|s| plain(s).is_none() && !s.contains(' ')).collect();
    let a = *plains.choose(r).unwrap();
    let mut b = *plains.choose(r).unwrap();
    while b == a {
        b = plains.choose(r).unwrap();
    }
    (a.to_owned(), b.to_owned())
}

/// `n` raw context records with defects planted at known positions.
pub fn planted_corpus(seed: u64, n: usize) -> PlantedCorpus {
    let mut r = rng(seed);
    let mut out = PlantedCorpus {
        lines: Vec::with_capacity(n),
        defects: BTreeMap::new(),
        expected_rejects: Vec::new(),
        expected_repairs: BTreeMap::new(),
        expected_kept: 0,
    };
    let mut kept_ids: Vec<String> = Vec::new();
    for i in 0..n {
        let id = format!("p{i:05}");
        let year = r.random_range(1990..2024);
        let (ln, rn) = (r.random_range(5..40), r.random_range(5..40));
        let left = words(&mut r, ln);
        let right = words(&mut r, rn);
        let defect = match r.random_range(0..20) {
            0..=6 => Defect::Clean,
            7 | 8 => Defect::SurfaceDiacritic,
            9 => Defect::ContextDiacritic,
            10 | 11 => Defect::SwappedPair,
            12 => Defect::SwappedPairDiacritic,
            13 => Defect::EmptyAuthor,
            14 | 15 => Defect::OtherCitations,
            16 => Defect::YearConflict,
            17 => Defect::Malformed,
            _ if !kept_ids.is_empty() => Defect::DuplicateId,
            _ => Defect::Clean,
        };
        let accented = *ACCENTED.choose(&mut r).unwrap();
        let (a, b) = plain_two(&mut r);
        let (record_id, value, outcome): (String, _, Result<Vec<RepairKind>, RejectReason>) = match defect {
            Defect::Clean => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right, "target_citation": format!("{a} and {b}, {year}")}),
                Ok(vec![]),
            ),
            Defect::SurfaceDiacritic => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right,
                       "target_citation": format!("{} et al., {year}", plain(accented).unwrap()),
                       "surface_citation": format!("{accented} et al., {year}")}),
                Ok(vec![RepairKind::SurfaceSpelling]),
            ),
            Defect::ContextDiacritic => (
                id.clone(),
                json!({"context_id": id, "left_text": format!("{left} as {accented} reported"), "right_text": right,
                       "target_citation": format!("{}, {year}", plain(accented).unwrap())}),
                Ok(vec![RepairKind::SurfaceSpelling]),
            ),
            Defect::SwappedPair => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right,
                       "target_citation": format!("{b} and {a}, {year}"),
                       "surface_citation": format!("{a} and {b}, {year}")}),
                Ok(vec![RepairKind::PairOrder]),
            ),
            Defect::SwappedPairDiacritic => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right,
                       "target_citation": format!("{b} and {}, {year}", plain(accented).unwrap()),
                       "surface_citation": format!("{accented} and {b}, {year}")}),
                Ok(vec![RepairKind::PairOrder, RepairKind::SurfaceSpelling]),
            ),
            Defect::EmptyAuthor => {
                let options = [String::new(), format!(", {year}"), format!("{a} and , {year}")];
                let target = options.choose(&mut r).unwrap().clone();
                (
                    id.clone(),
                    json!({"context_id": id, "left_text": left, "right_text": right, "target_citation": target}),
                    Err(RejectReason::EmptyAuthor),
                )
            }
            Defect::OtherCitations => (
                id.clone(),
                json!({"context_id": id, "left_text": format!("{left} OTHERCIT OTHERCIT ,"), "right_text": format!("OTHERCIT {right} OTHERCIT ."),
                       "target_citation": format!("{a}, {year}")}),
                Ok(vec![]),
            ),
            Defect::YearConflict => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right,
                       "target_citation": format!("{a} and {b}, {year}"),
                       "surface_citation": format!("{a} and {b}, {}", year + 1)}),
                Err(RejectReason::AuthorMismatch),
            ),
            Defect::Malformed => (
                id.clone(),
                json!({"context_id": id, "left_text": left, "right_text": right, "target_citation": format!("({a} {year})")}),
                Err(RejectReason::MalformedCitation),
            ),
            Defect::DuplicateId => {
                let dup = kept_ids.choose(&mut r).unwrap().clone();
                (
                    dup.clone(),
                    json!({"context_id": dup, "left_text": left, "right_text": right, "target_citation": format!("{a}, {year}")}),
                    Err(RejectReason::DuplicateId),
                )
            }
        };
        out.lines.push(line(i + 1, value));
        match outcome {
            Ok(repairs) => {
                out.expected_kept += 1;
                kept_ids.push(record_id.clone());
                if !repairs.is_empty() {
                    let mut repairs = repairs;
                    repairs.sort();
                    out.expected_repairs.insert(record_id.clone(), repairs);
                }
            }
            Err(reason) => out.expected_rejects.push(reason),
        }
        out.defects.entry(record_id).or_default().push(defect);
    }
    out
}

// ------------------------------------------------------------ mask contexts

pub struct MaskFixture {
    pub contexts: Vec<LocalContext>,
    pub papers: Vec<PaperMeta>,
}

/// Contexts with side lengths spread from empty to well past every window.
pub fn mask_fixture(seed: u64, n: usize, dataset: Dataset) -> MaskFixture {
    let mut r = rng(seed);
    let mut papers = Vec::new();
    let contexts = (0..n)
        .map(|i| {
            let side = |r: &mut ChaCha8Rng| match r.random_range(0..4) {
                0 => r.random_range(0..20),
                1 => r.random_range(20..220),
                _ => r.random_range(220..700),
            };
            let (l, rt) = (side(&mut r), side(&mut r));
            let left = words(&mut r, l);
            let right = words(&mut r, rt);
            let paper_id = format!("P{i:05}");
            let title_len = r.random_range(1..30);
            let abstract_len = r.random_range(0..500);
            papers.push(PaperMeta {
                paper_id: paper_id.clone(),
                title: words(&mut r, title_len),
                abstract_text: words(&mut r, abstract_len),
                author_surnames: vec!["Writer".into()],
                year: 2015,
            });
            LocalContext {
                context_id: format!("m{i:05}"),
                dataset,
                left_text: left,
                right_text: right,
                ground_truth: tok(&random_citation(&mut r)),
                citing_paper_id: Some(paper_id),
                cited_paper_id: None,
            }
        })
        .collect();
    MaskFixture { contexts, papers }
}

// ------------------------------------------------------------ taxonomy

pub const TRUTH_POOL: [&str; 5] =
    ["Klein and Manning, 2003", "Talbot and Brants, 2008", "Weinreich, 2006", "Petrovic et al., 2010", "Chiang, 2005"];

/// (prediction, ground truth, expected label name)
pub const TRUTH_TABLE: [(&str, &str, &str); 12] = [
    ("Klein and Manning, 2003", "Klein and Manning, 2003", "in_pool"),
    ("Petrović et al., 2010", "Klein and Manning, 2003", "in_pool"),
    ("(Klein and Manning 2003)", "Klein and Manning, 2003", "wrong_format"),
    ("Klein and Manning", "Klein and Manning, 2003", "wrong_format"),
    ("Klein and Manning, 2004", "Klein and Manning, 2003", "all_names_gt"),
    ("Manning and Klein, 2003", "Klein and Manning, 2003", "one_name_gt"),
    ("MTalbot and Brants, 2008", "Talbot and Brants, 2008", "one_name_gt"),
    ("Weinreich et al., 2008", "Weinreich, 2006", "one_name_gt"),
    ("Smith, 2003", "Klein and Manning, 2003", "year_gt"),
    ("Pauls et al., 2003", "Klein and Manning, 2003", "year_gt"),
    ("Ait-Mokhtar and Chanod, 2005", "Klein and Manning, 2003", "other_hal"),
    ("Pauls et al., 2006", "Klein and Manning, 2003", "other_hal"),
];

/// Rows of [`TRUTH_TABLE`] whose label differs from the expectation, as
/// `(prediction, got, want)`.
pub fn truth_table_failures() -> Vec<(String, String, String)> {
    let tokens: Vec<CitationToken> = TRUTH_POOL.iter().map(|s| tok(s)).collect();
    let pool = citeharness_core::corpus::build_pool_from_tokens(&tokens);
    TRUTH_TABLE
        .iter()
        .filter_map(|&(pred, gt, want)| {
            let got = citeharness_core::halometer::classify(pred, &tok(gt), &pool);
            (got.name() != want).then(|| (pred.to_owned(), got.name().to_owned(), want.to_owned()))
        })
        .collect()
}

/// Brute-force ranking metrics from the planted match flags, as exact
/// `(recall, exact match, mrr)`.
pub fn planted_oracle(
    p: &PlantedPredictions,
) -> (num_rational::BigRational, num_rational::BigRational, num_rational::BigRational) {
    use num_rational::BigRational;
    let q = |a: usize, b: usize| BigRational::new(a.into(), b.into());
    let n = p.preds.len();
    let (mut hits, mut exact) = (0, 0);
    let mut rr = q(0, 1);
    for flags in p.matches.values() {
        if let Some(i) = flags.iter().take(p.k).position(|&f| f) {
            hits += 1;
            exact += usize::from(i == 0);
            rr += q(1, i + 1);
        }
    }
    (q(hits, n), q(exact, n), rr / q(n, 1))
}

/// Side lengths around the mask and separator count of a built input.
pub fn window_shape(input: &str, mask: &str, sep: &str) -> (usize, usize, usize) {
    let tokens: Vec<&str> = input.split_whitespace().collect();
    let m = tokens.iter().position(|t| *t == mask).expect("no mask");
    let end = tokens[m + 1..].iter().position(|t| *t == sep).map_or(tokens.len(), |i| m + 1 + i);
    (m, end - m - 1, tokens.iter().filter(|t| **t == sep).count())
}
