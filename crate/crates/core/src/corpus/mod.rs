//! Benchmark ingestion, preprocessing, splits and citation pools.
//!
//! Every record is processed by a pure function, so ingestion runs as a
//! parallel map followed by a sequential, order-preserving dedupe pass.

mod pool;
mod repair;
mod split;
mod strip;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::citegrammar::{self, fold_surname, CitationToken, NormalizedKey};
use crate::jsonl::{self, JsonlError, RawLine};

pub use pool::{build_pool, build_pool_from_tokens, CitationPool, PoolEntry};
pub use repair::{has_empty_author, repair_citation, Rejection, RepairKind, Repaired};
pub use split::{split, split_three, SplitManifest};
pub use strip::{count_markers, strip_markers, strip_nontarget_citations, OTHER_CITATION_MARKER};

/// Placeholder for the target citation in raw benchmark text.
pub const TARGET_MARKER: &str = "TARGETCIT";
/// Default mask token; raw text must not already contain it.
pub const MASK_TOKEN: &str = "<mask>";

pub const CONTEXTS_FILE: &str = "contexts.jsonl";
pub const PAPERS_FILE: &str = "papers.jsonl";
pub const REJECTS_FILE: &str = "rejects.jsonl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratio must lie in (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("invalid normalized record {context_id:?}: {reason}")]
    InvalidRecord { context_id: String, reason: String },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    #[serde(rename = "ACL200", alias = "acl200", alias = "ACL-200")]
    Acl200,
    #[serde(alias = "peerread")]
    PeerRead,
    #[serde(alias = "refseer")]
    RefSeer,
    #[serde(alias = "arxiv")]
    ArXiv,
    #[serde(alias = "custom")]
    Custom,
}

impl Dataset {
    pub const ALL: [Dataset; 5] = [
        Dataset::Acl200,
        Dataset::PeerRead,
        Dataset::RefSeer,
        Dataset::ArXiv,
        Dataset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Acl200 => "ACL200",
            Dataset::PeerRead => "PeerRead",
            Dataset::RefSeer => "RefSeer",
            Dataset::ArXiv => "ArXiv",
            Dataset::Custom => "Custom",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match squashed.as_str() {
            "acl200" | "acl" => Ok(Dataset::Acl200),
            "peerread" | "fulltextpeerread" => Ok(Dataset::PeerRead),
            "refseer" => Ok(Dataset::RefSeer),
            "arxiv" => Ok(Dataset::ArXiv),
            "custom" => Ok(Dataset::Custom),
            _ => Err(format!("unknown dataset {s:?}")),
        }
    }
}

/// One citation occurrence with the target removed from the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalContext {
    pub context_id: String,
    pub dataset: Dataset,
    pub left_text: String,
    pub right_text: String,
    pub ground_truth: CitationToken,
    pub citing_paper_id: Option<String>,
    pub cited_paper_id: Option<String>,
}

/// Normalized on-disk form of a [`LocalContext`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub context_id: String,
    pub dataset: Dataset,
    pub left_text: String,
    pub right_text: String,
    pub target_citation: String,
    #[serde(default)]
    pub citing_paper_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cited_paper_id: Option<String>,
}

impl From<&LocalContext> for ContextRecord {
    fn from(ctx: &LocalContext) -> Self {
        Self {
            context_id: ctx.context_id.clone(),
            dataset: ctx.dataset,
            left_text: ctx.left_text.clone(),
            right_text: ctx.right_text.clone(),
            target_citation: ctx.ground_truth.raw.clone(),
            citing_paper_id: ctx.citing_paper_id.clone(),
            cited_paper_id: ctx.cited_paper_id.clone(),
        }
    }
}

impl TryFrom<ContextRecord> for LocalContext {
    type Error = CorpusError;

    fn try_from(rec: ContextRecord) -> Result<Self, Self::Error> {
        let invalid = |reason: String| CorpusError::InvalidRecord {
            context_id: rec.context_id.clone(),
            reason,
        };
        let ground_truth = citegrammar::parse(&rec.target_citation).map_err(|e| invalid(e.to_string()))?;
        for text in [&rec.left_text, &rec.right_text] {
            if text.contains(TARGET_MARKER) || text.contains(MASK_TOKEN) {
                return Err(invalid("context text still contains a marker".into()));
            }
        }
        Ok(LocalContext {
            context_id: rec.context_id,
            dataset: rec.dataset,
            left_text: rec.left_text,
            right_text: rec.right_text,
            ground_truth,
            citing_paper_id: rec.citing_paper_id,
            cited_paper_id: rec.cited_paper_id,
        })
    }
}

impl LocalContext {
    pub fn key(&self) -> NormalizedKey {
        self.ground_truth.key()
    }
}

/// Title, abstract, authors and year of one paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperMeta {
    pub paper_id: String,
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default, rename = "authors")]
    pub author_surnames: Vec<String>,
    pub year: u16,
}

impl PaperMeta {
    /// Author-date key this paper would be cited under: one surname, two
    /// surnames, or lead surname with et al. for three or more authors.
    pub fn citation_key(&self) -> Option<NormalizedKey> {
        let folded = |s: &String| fold_surname(s.trim());
        let (folded_surnames, et_al) = match self.author_surnames.as_slice() {
            [] => return None,
            [a] => (vec![folded(a)], false),
            [a, b] => (vec![folded(a), folded(b)], false),
            [a, ..] => (vec![folded(a)], true),
        };
        if folded_surnames.iter().any(String::is_empty) {
            return None;
        }
        Some(NormalizedKey {
            folded_surnames,
            et_al,
            year: self.year,
        })
    }

    fn validate(&self) -> Result<(), &'static str> {
        if self.paper_id.trim().is_empty() {
            return Err("empty paper_id");
        }
        if self.title.trim().is_empty() {
            return Err("empty title");
        }
        if !(1800..=2100).contains(&self.year) {
            return Err("year outside [1800, 2100]");
        }
        Ok(())
    }
}

/// Reason codes written to the rejects file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    /// Target citation has an empty author name.
    EmptyAuthor,
    /// Metadata and in-context author lists cannot be reconciled.
    AuthorMismatch,
    /// Target citation is outside the author-date grammar.
    MalformedCitation,
    /// A required field is absent.
    MissingField,
    /// The line is not a JSON object.
    InvalidJson,
    /// The line is not valid UTF-8.
    InvalidUtf8,
    /// The context has no target placeholder, or more than one.
    MissingPlaceholder,
    /// The context already contains a mask token.
    StrayMarker,
    DuplicateId,
    InvalidPaper,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::EmptyAuthor => "EMPTY_AUTHOR",
            RejectReason::AuthorMismatch => "AUTHOR_MISMATCH",
            RejectReason::MalformedCitation => "MALFORMED_CITATION",
            RejectReason::MissingField => "MISSING_FIELD",
            RejectReason::InvalidJson => "INVALID_JSON",
            RejectReason::InvalidUtf8 => "INVALID_UTF8",
            RejectReason::MissingPlaceholder => "MISSING_PLACEHOLDER",
            RejectReason::StrayMarker => "STRAY_MARKER",
            RejectReason::DuplicateId => "DUPLICATE_ID",
            RejectReason::InvalidPaper => "INVALID_PAPER",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectRecord {
    /// The offending record: parsed JSON when possible, otherwise the line text.
    pub record: Value,
    pub reason: RejectReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Raw context record as produced by the per-benchmark converters. Either
/// `context` (with exactly one target placeholder) or both `left_text` and
/// `right_text` must be present. `surface_citation` carries the target as it
/// is written in the citing text, when the converter can recover it.
#[derive(Debug, Clone, Default, Deserialize)]
struct RawContext {
    context_id: Option<String>,
    context: Option<String>,
    left_text: Option<String>,
    right_text: Option<String>,
    target_citation: Option<String>,
    surface_citation: Option<String>,
    citing_paper_id: Option<String>,
    cited_paper_id: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub contexts: Vec<LocalContext>,
    pub papers: Vec<PaperMeta>,
    /// Rejected context records.
    pub rejects: Vec<RejectRecord>,
    pub paper_rejects: Vec<RejectRecord>,
    /// Repairs applied to kept contexts, keyed by context id.
    pub repairs: Vec<(String, Vec<RepairKind>)>,
    pub ingested_contexts: usize,
    pub ingested_papers: usize,
}

impl Ingested {
    /// Context rejects followed by paper rejects, as written to the rejects file.
    pub fn all_rejects(&self) -> Vec<RejectRecord> {
        self.rejects.iter().chain(&self.paper_rejects).cloned().collect()
    }
}

fn reject(record: Value, reason: RejectReason, detail: impl Into<Option<String>>) -> RejectRecord {
    RejectRecord {
        record,
        reason,
        detail: detail.into(),
    }
}

fn decode_line(line: &RawLine) -> Result<Value, RejectRecord> {
    let text = std::str::from_utf8(&line.bytes).map_err(|_| {
        reject(
            Value::String(String::from_utf8_lossy(&line.bytes).into_owned()),
            RejectReason::InvalidUtf8,
            format!("line {}", line.line),
        )
    })?;
    let value: Value = serde_json::from_str(text).map_err(|e| {
        reject(Value::String(text.to_owned()), RejectReason::InvalidJson, e.to_string())
    })?;
    if !value.is_object() {
        return Err(reject(value, RejectReason::InvalidJson, "not an object".to_owned()));
    }
    Ok(value)
}

/// Turn one raw context line into a preprocessed context.
pub fn preprocess_line(line: &RawLine, dataset: Dataset) -> Result<(LocalContext, Vec<RepairKind>), RejectRecord> {
    let value = decode_line(line)?;
    preprocess_value(value, dataset)
}

fn preprocess_value(value: Value, dataset: Dataset) -> Result<(LocalContext, Vec<RepairKind>), RejectRecord> {
    let raw: RawContext = match serde_json::from_value(value.clone()) {
        Ok(raw) => raw,
        Err(e) => return Err(reject(value, RejectReason::InvalidJson, e.to_string())),
    };
    let missing = |field: &str| reject(value.clone(), RejectReason::MissingField, field.to_owned());

    let context_id = match raw.context_id.filter(|id| !id.trim().is_empty()) {
        Some(id) => id,
        None => return Err(missing("context_id")),
    };
    let Some(target) = raw.target_citation else {
        return Err(missing("target_citation"));
    };
    let (left, right) = match (raw.left_text, raw.right_text, raw.context) {
        (Some(l), Some(r), _) => (l, r),
        (_, _, Some(text)) => {
            let mut parts = text.split(TARGET_MARKER);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) => (l.to_owned(), r.to_owned()),
                _ => {
                    return Err(reject(
                        value,
                        RejectReason::MissingPlaceholder,
                        format!("expected exactly one {TARGET_MARKER}"),
                    ))
                }
            }
        }
        _ => return Err(missing("context or left_text/right_text")),
    };
    if left.contains(TARGET_MARKER) || right.contains(TARGET_MARKER) {
        return Err(reject(value, RejectReason::MissingPlaceholder, "more than one target".to_owned()));
    }
    if left.contains(MASK_TOKEN) || right.contains(MASK_TOKEN) {
        return Err(reject(value, RejectReason::StrayMarker, MASK_TOKEN.to_owned()));
    }

    let left_text = strip_markers(&left);
    let right_text = strip_markers(&right);
    let repaired = repair_citation(&target, raw.surface_citation.as_deref(), &left_text, &right_text)
        .map_err(|rejection| reject(value.clone(), rejection.reason(), rejection.to_string()))?;

    Ok((
        LocalContext {
            context_id,
            dataset,
            left_text,
            right_text,
            ground_truth: repaired.token,
            citing_paper_id: raw.citing_paper_id,
            cited_paper_id: raw.cited_paper_id,
        },
        repaired.repairs,
    ))
}

fn preprocess_paper(line: &RawLine) -> Result<PaperMeta, RejectRecord> {
    let value = decode_line(line)?;
    let paper: PaperMeta = serde_json::from_value(value.clone())
        .map_err(|e| reject(value.clone(), RejectReason::MissingField, e.to_string()))?;
    paper
        .validate()
        .map_err(|why| reject(value, RejectReason::InvalidPaper, why.to_owned()))?;
    Ok(paper)
}

/// Ingest raw context and paper lines. Rejected records are collected with a
/// reason code; `contexts.len() + rejects.len() == ingested_contexts`.
/// Output contexts and papers are sorted by id.
pub fn ingest(context_lines: &[RawLine], paper_lines: &[RawLine], dataset: Dataset) -> Ingested {
    let processed: Vec<_> = context_lines
        .par_iter()
        .map(|line| preprocess_line(line, dataset))
        .collect();
    let papers_processed: Vec<_> = paper_lines.par_iter().map(preprocess_paper).collect();

    let mut out = Ingested {
        ingested_contexts: context_lines.len(),
        ingested_papers: paper_lines.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for result in processed {
        match result {
            Ok((ctx, repairs)) => {
                if seen.insert(ctx.context_id.clone()) {
                    if !repairs.is_empty() {
                        out.repairs.push((ctx.context_id.clone(), repairs));
                    }
                    out.contexts.push(ctx);
                } else {
                    let record = serde_json::to_value(ContextRecord::from(&ctx)).unwrap_or(Value::Null);
                    out.rejects
                        .push(reject(record, RejectReason::DuplicateId, ctx.context_id.clone()));
                }
            }
            Err(rej) => out.rejects.push(rej),
        }
    }
    let mut seen_papers = HashSet::new();
    for result in papers_processed {
        match result {
            Ok(paper) => {
                if seen_papers.insert(paper.paper_id.clone()) {
                    out.papers.push(paper);
                } else {
                    let record = serde_json::to_value(&paper).unwrap_or(Value::Null);
                    out.paper_rejects
                        .push(reject(record, RejectReason::DuplicateId, paper.paper_id.clone()));
                }
            }
            Err(rej) => out.paper_rejects.push(rej),
        }
    }
    out.contexts.sort_by(|a, b| a.context_id.cmp(&b.context_id));
    out.papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    out.repairs.sort();
    out
}

/// Read raw files and ingest them. `papers` may be absent for Base-only corpora.
pub fn ingest_files(contexts: &Path, papers: Option<&Path>, dataset: Dataset) -> Result<Ingested, CorpusError> {
    let context_lines = jsonl::read_raw_lines(contexts)?;
    let paper_lines = match papers {
        Some(p) => jsonl::read_raw_lines(p)?,
        None => Vec::new(),
    };
    Ok(ingest(&context_lines, &paper_lines, dataset))
}

/// Write `contexts.jsonl`, `papers.jsonl` and `rejects.jsonl` into `dir`.
pub fn save_dataset(dir: &Path, data: &Ingested) -> Result<(), CorpusError> {
    std::fs::create_dir_all(dir).map_err(|source| JsonlError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let records: Vec<ContextRecord> = data.contexts.iter().map(ContextRecord::from).collect();
    jsonl::write(&dir.join(CONTEXTS_FILE), &records)?;
    jsonl::write(&dir.join(PAPERS_FILE), &data.papers)?;
    jsonl::write(&dir.join(REJECTS_FILE), &data.all_rejects())?;
    Ok(())
}

pub fn load_contexts(path: &Path) -> Result<Vec<LocalContext>, CorpusError> {
    let records: Vec<ContextRecord> = jsonl::read(path)?;
    records.into_iter().map(LocalContext::try_from).collect()
}

pub fn load_papers(path: &Path) -> Result<Vec<PaperMeta>, CorpusError> {
    Ok(jsonl::read(path)?)
}

/// A preprocessed dataset directory loaded into memory.
#[derive(Debug, Clone)]
pub struct DatasetDir {
    pub contexts: Vec<LocalContext>,
    pub papers: Vec<PaperMeta>,
}

impl DatasetDir {
    /// Load `contexts.jsonl` and, when present, `papers.jsonl` from `dir`.
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let contexts = load_contexts(&dir.join(CONTEXTS_FILE))?;
        let papers_path = dir.join(PAPERS_FILE);
        let papers = if papers_path.exists() {
            load_papers(&papers_path)?
        } else {
            Vec::new()
        };
        Ok(Self { contexts, papers })
    }

    pub fn dataset(&self) -> Dataset {
        self.contexts.first().map_or(Dataset::Custom, |c| c.dataset)
    }

    pub fn ground_truths(&self) -> std::collections::HashMap<String, CitationToken> {
        self.contexts
            .iter()
            .map(|c| (c.context_id.clone(), c.ground_truth.clone()))
            .collect()
    }

    /// Pool over every context of the dataset, linked to its papers.
    pub fn pool(&self) -> CitationPool {
        let mut pool = build_pool(&self.contexts);
        pool.link_papers(&self.papers);
        pool
    }
}
