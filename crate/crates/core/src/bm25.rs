//! Okapi BM25 retrieval over the citation pool.
//!
//! One document per pool entry. By default a document is the concatenated
//! title and abstract of the paper(s) linked to the entry; the alternative
//! unit aggregates the training contexts that cite the entry.
//!
//! ```text
//! score(q, d) = Σ_t idf(t) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationPool, LocalContext, PaperMeta};
use crate::evalcore::PredictionRecord;
use crate::maskbuilder::MaskedExample;
use crate::NormalizedKey;

#[derive(Debug, Error)]
pub enum Bm25Error {
    #[error("citation pool is empty")]
    EmptyPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Text analysis: lowercase, split on anything that is not alphanumeric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyzer {
    pub lowercase: bool,
    pub min_token_chars: usize,
    #[serde(default)]
    pub stopwords: Vec<String>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_chars: 1,
            stopwords: Vec::new(),
        }
    }
}

impl Analyzer {
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let stop: HashSet<&str> = self.stopwords.iter().map(String::as_str).collect();
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.chars().count() >= self.min_token_chars.max(1))
            .map(|w| if self.lowercase { w.to_lowercase() } else { w.to_owned() })
            .filter(|w| !stop.contains(w.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentUnit {
    /// Title and abstract of the cited paper(s).
    #[default]
    CitedPaper,
    /// Left and right text of the training contexts citing the entry.
    CitingContexts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index, immutable once built.
#[derive(Debug, Clone)]
pub struct Index {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_keys: Vec<NormalizedKey>,
    doc_display: Vec<String>,
    analyzer: Analyzer,
    /// Pool entries with no text at all (no linked paper, no context).
    pub empty_documents: usize,
}

impl Index {
    /// Index pre-analyzed documents. `docs[i]` belongs to `keys[i]`.
    pub fn from_documents(
        keys: Vec<NormalizedKey>,
        display: Vec<String>,
        docs: Vec<Vec<String>>,
        analyzer: Analyzer,
    ) -> Result<Self, Bm25Error> {
        if docs.is_empty() {
            return Err(Bm25Error::EmptyPool);
        }
        assert_eq!(keys.len(), docs.len());
        assert_eq!(display.len(), docs.len());
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut empty_documents = 0;
        for (ordinal, terms) in docs.into_iter().enumerate() {
            doc_lengths.push(terms.len() as u32);
            empty_documents += usize::from(terms.is_empty());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for term in terms {
                *tf.entry(term).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(Self {
            postings,
            doc_lengths,
            avg_doc_length,
            doc_keys: keys,
            doc_display: display,
            analyzer,
            empty_documents,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lengths.is_empty()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_key(&self, ordinal: usize) -> &NormalizedKey {
        &self.doc_keys[ordinal]
    }

    pub fn doc_display(&self, ordinal: usize) -> &str {
        &self.doc_display[ordinal]
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, tf: u32, ordinal: usize, params: Bm25Params) -> f64 {
        let tf = f64::from(tf);
        let norm = if self.avg_doc_length > 0.0 {
            1.0 - params.b + params.b * f64::from(self.doc_lengths[ordinal]) / self.avg_doc_length
        } else {
            1.0
        };
        tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }

    /// Every document's score for the query, in ordinal order.
    pub fn score_all(&self, query_terms: &[String], params: Bm25Params) -> Vec<f64> {
        let mut scores = vec![0.0; self.len()];
        for (term, qtf) in query_counts(query_terms) {
            let idf = self.idf(term);
            for posting in self.postings(term) {
                let doc = posting.doc as usize;
                scores[doc] += f64::from(qtf) * idf * self.term_weight(posting.tf, doc, params);
            }
        }
        scores
    }
}

/// Query term multiplicities in a fixed (sorted) order, so summation order
/// and therefore floating-point results are reproducible.
fn query_counts(query_terms: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in query_terms {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    counts
}

/// Build the index: one document per pool entry, in pool key order.
///
/// `contexts` is only read for [`DocumentUnit::CitingContexts`] and should be
/// the training part of the split.
pub fn build_index(
    pool: &CitationPool,
    papers: &[PaperMeta],
    contexts: &[LocalContext],
    analyzer: &Analyzer,
    unit: DocumentUnit,
) -> Result<Index, Bm25Error> {
    if pool.is_empty() {
        return Err(Bm25Error::EmptyPool);
    }
    let by_id: HashMap<&str, &PaperMeta> = papers.iter().map(|p| (p.paper_id.as_str(), p)).collect();
    let mut by_key: HashMap<&NormalizedKey, Vec<&LocalContext>> = HashMap::new();
    if unit == DocumentUnit::CitingContexts {
        let keys: Vec<(NormalizedKey, &LocalContext)> = contexts.iter().map(|c| (c.key(), c)).collect();
        for (key, ctx) in &keys {
            if let Some((pool_key, _)) = pool.entries.get_key_value(key) {
                by_key.entry(pool_key).or_default().push(ctx);
            }
        }
    }

    let mut keys = Vec::with_capacity(pool.len());
    let mut display = Vec::with_capacity(pool.len());
    let mut docs = Vec::with_capacity(pool.len());
    for (key, entry) in pool.iter() {
        let mut text = String::new();
        match unit {
            DocumentUnit::CitedPaper => {
                for paper in entry.paper_ids.iter().filter_map(|id| by_id.get(id.as_str())) {
                    text.push_str(&paper.title);
                    text.push(' ');
                    text.push_str(&paper.abstract_text);
                    text.push(' ');
                }
            }
            DocumentUnit::CitingContexts => {
                for ctx in by_key.get(key).into_iter().flatten() {
                    text.push_str(&ctx.left_text);
                    text.push(' ');
                    text.push_str(&ctx.right_text);
                    text.push(' ');
                }
            }
        }
        keys.push(key.clone());
        display.push(entry.display.clone());
        docs.push(analyzer.analyze(&text));
    }
    Index::from_documents(keys, display, docs, analyzer.clone())
}

/// BM25 score of one document.
pub fn score(query_terms: &[String], doc_ordinal: usize, idx: &Index, params: Bm25Params) -> f64 {
    assert!(doc_ordinal < idx.len(), "document ordinal out of range");
    let mut total = 0.0;
    for (term, qtf) in query_counts(query_terms) {
        if let Some(p) = idx.postings(term).iter().find(|p| p.doc as usize == doc_ordinal) {
            total += f64::from(qtf) * idx.idf(term) * idx.term_weight(p.tf, doc_ordinal, params);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub key: NormalizedKey,
    pub display: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub context_id: String,
    pub ranked: Vec<RankedEntry>,
    pub k: usize,
}

impl Ranking {
    pub fn to_prediction(&self) -> PredictionRecord {
        PredictionRecord {
            context_id: self.context_id.clone(),
            predictions: self.ranked.iter().map(|e| e.display.clone()).collect(),
        }
    }
}

/// Ordinals of the `k` best scores, ties broken by ascending ordinal.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    let mut ordinals: Vec<usize> = (0..scores.len()).collect();
    let k = k.min(ordinals.len());
    if k == 0 {
        return Vec::new();
    }
    if k < ordinals.len() {
        ordinals.select_nth_unstable_by(k - 1, cmp);
        ordinals.truncate(k);
    }
    ordinals.sort_by(cmp);
    ordinals
}

/// Remove the mask and separator markers before analysis.
pub fn query_text(input_text: &str, mask_token: &str, separator: &str) -> String {
    input_text.replace(mask_token, " ").replace(separator, " ")
}

/// Rank the pool for one masked example.
pub fn retrieve(example: &MaskedExample, idx: &Index, k: usize, params: Bm25Params, markers: (&str, &str)) -> Ranking {
    let query = idx.analyzer.analyze(&query_text(&example.input_text, markers.0, markers.1));
    let scores = idx.score_all(&query, params);
    let ranked = top_k(&scores, k)
        .into_iter()
        .map(|o| RankedEntry {
            key: idx.doc_keys[o].clone(),
            display: idx.doc_display[o].clone(),
            score: scores[o],
        })
        .collect();
    Ranking {
        context_id: example.context_id.clone(),
        ranked,
        k,
    }
}
