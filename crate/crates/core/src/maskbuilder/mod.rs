//! Model-ready masked inputs under the Base, Global and ablation schemes.
//!
//! Base inputs are the local context with the target replaced by a single
//! mask token, windowed so the mask sits in the middle. Global inputs append
//! the citing paper's title and abstract after separators:
//!
//! ```text
//! <left window> <mask> <right window> </s> <title> </s> <abstract>
//! ```
//!
//! The ablation schemes are derived from the Global layout by dropping one
//! segment, so each is a token subsequence of the Global input.

mod tokenizer;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, LocalContext, PaperMeta, MASK_TOKEN};

pub use tokenizer::{Tokenizer, VocabTokenizer, WhitespaceTokenizer};

pub const DEFAULT_SEPARATOR: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("context {context_id}: scheme {scheme} needs {what} metadata")]
    MissingMeta {
        context_id: String,
        scheme: Scheme,
        what: &'static str,
    },
    #[error("context {0}: both sides of the mask are empty")]
    EmptyContext(String),
    #[error("invalid scheme config: {0}")]
    InvalidConfig(String),
}

impl MaskError {
    pub fn code(&self) -> &'static str {
        match self {
            MaskError::MissingMeta { .. } => "MISSING_META",
            MaskError::EmptyContext(_) => "EMPTY_CONTEXT",
            MaskError::InvalidConfig(_) => "INVALID_CONFIG",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Base,
    Global,
    NoContext,
    NoTitle,
    NoAbstract,
    AllIncluding,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Base,
        Scheme::Global,
        Scheme::NoContext,
        Scheme::NoTitle,
        Scheme::NoAbstract,
        Scheme::AllIncluding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Base => "base",
            Scheme::Global => "global",
            Scheme::NoContext => "no_context",
            Scheme::NoTitle => "no_title",
            Scheme::NoAbstract => "no_abstract",
            Scheme::AllIncluding => "all_including",
        }
    }

    /// Everything except Base reads the citing paper's metadata.
    pub fn needs_meta(self) -> bool {
        self != Scheme::Base
    }

    pub fn has_mask(self) -> bool {
        self != Scheme::NoContext
    }

    pub fn separator_count(self) -> usize {
        match self {
            Scheme::Base => 0,
            Scheme::Global => 2,
            Scheme::NoContext | Scheme::NoTitle | Scheme::NoAbstract => 1,
            Scheme::AllIncluding => 4,
        }
    }

    /// Separators budgeted by the layout. The ablations share the Global
    /// layout so they stay token subsequences of the Global input.
    fn layout_separators(self) -> usize {
        match self {
            Scheme::Base => 0,
            Scheme::AllIncluding => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().replace('_', "") == squashed)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

/// Token budgets and marker strings for one scheme.
///
/// `context_limit` counts context tokens only; the mask and separators count
/// against `total_limit`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub total_limit: usize,
    pub context_limit: usize,
    pub side_window: usize,
    pub abstract_limit: usize,
    pub mask_token: String,
    pub separator: String,
}

/// Base-scheme token limit per dataset.
pub fn base_limit(dataset: Dataset) -> usize {
    match dataset {
        Dataset::Acl200 | Dataset::PeerRead | Dataset::Custom => 400,
        Dataset::RefSeer => 200,
        Dataset::ArXiv => 300,
    }
}

pub const GLOBAL_TOTAL_LIMIT: usize = 350;
pub const GLOBAL_CONTEXT_LIMIT: usize = 100;
pub const GLOBAL_SIDE_WINDOW: usize = 50;
pub const ABSTRACT_LIMIT: usize = 200;

impl SchemeConfig {
    /// Per-dataset defaults.
    pub fn for_dataset(dataset: Dataset, scheme: Scheme) -> Self {
        let (total_limit, context_limit, side_window) = match scheme {
            Scheme::Base => {
                let limit = base_limit(dataset);
                (limit, limit, limit / 2)
            }
            _ => (GLOBAL_TOTAL_LIMIT, GLOBAL_CONTEXT_LIMIT, GLOBAL_SIDE_WINDOW),
        };
        Self {
            scheme,
            total_limit,
            context_limit,
            side_window,
            abstract_limit: ABSTRACT_LIMIT,
            mask_token: MASK_TOKEN.to_owned(),
            separator: DEFAULT_SEPARATOR.to_owned(),
        }
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        let fail = |msg: String| Err(MaskError::InvalidConfig(msg));
        if self.side_window * 2 > self.context_limit {
            return fail(format!("2 * side_window {} > context_limit {}", self.side_window, self.context_limit));
        }
        if self.context_limit > self.total_limit {
            return fail(format!("context_limit {} > total_limit {}", self.context_limit, self.total_limit));
        }
        if self.abstract_limit > self.total_limit {
            return fail(format!("abstract_limit {} > total_limit {}", self.abstract_limit, self.total_limit));
        }
        let reserved = 1 + self.scheme.layout_separators();
        if reserved >= self.total_limit {
            return fail(format!("total_limit {} leaves no room for content", self.total_limit));
        }
        if self.mask_token.trim().is_empty() || self.separator.trim().is_empty() || self.mask_token == self.separator {
            return fail("mask token and separator must be distinct, non-blank strings".into());
        }
        if self.mask_token.contains(char::is_whitespace) || self.separator.contains(char::is_whitespace) {
            return fail("mask token and separator must not contain whitespace".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub context_id: String,
    pub scheme: Scheme,
    pub input_text: String,
    pub target_text: String,
    #[serde(default, skip_serializing)]
    pub token_count: usize,
}

/// Window bookkeeping for one built example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WindowInfo {
    pub left_available: usize,
    pub right_available: usize,
    pub left_kept: usize,
    pub right_kept: usize,
}

impl WindowInfo {
    pub fn truncated(&self) -> bool {
        self.left_kept < self.left_available || self.right_kept < self.right_available
    }

    /// The mask is off-center when the kept sides differ by more than one
    /// token even though the shorter side had more text to give.
    pub fn off_center(&self) -> bool {
        let (short_kept, short_avail, long_kept) = if self.left_kept <= self.right_kept {
            (self.left_kept, self.left_available, self.right_kept)
        } else {
            (self.right_kept, self.right_available, self.left_kept)
        };
        long_kept > short_kept + 1 && short_avail > short_kept
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Built {
    pub example: MaskedExample,
    pub window: WindowInfo,
}

/// Metadata attached to one context when building inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetaInputs<'a> {
    pub citing: Option<&'a PaperMeta>,
    /// Only read by [`Scheme::AllIncluding`].
    pub cited: Option<&'a PaperMeta>,
}

fn tokens_without_markers(tok: &dyn Tokenizer, text: &str, cfg: &SchemeConfig) -> Vec<String> {
    tok.tokenize(text)
        .into_iter()
        .filter(|t| *t != cfg.mask_token && *t != cfg.separator)
        .collect()
}

/// Shrink the larger side (right on ties) until `fits` accepts the pair.
fn balance(mut left: usize, mut right: usize, fits: impl Fn(usize, usize) -> bool) -> (usize, usize) {
    while !fits(left, right) && left + right > 0 {
        if right >= left {
            right -= 1;
        } else {
            left -= 1;
        }
    }
    (left, right)
}

/// Build one masked example.
pub fn build(
    ctx: &LocalContext,
    meta: MetaInputs<'_>,
    cfg: &SchemeConfig,
    tok: &dyn Tokenizer,
) -> Result<Built, MaskError> {
    cfg.validate()?;
    let scheme = cfg.scheme;
    let missing = |what| MaskError::MissingMeta {
        context_id: ctx.context_id.clone(),
        scheme,
        what,
    };
    let citing = match (scheme.needs_meta(), meta.citing) {
        (true, None) => return Err(missing("citing-paper")),
        (_, m) => m,
    };
    let cited = match (scheme, meta.cited) {
        (Scheme::AllIncluding, None) => return Err(missing("cited-paper")),
        (_, m) => m,
    };

    let left_all = tokens_without_markers(tok, &ctx.left_text, cfg);
    let right_all = tokens_without_markers(tok, &ctx.right_text, cfg);
    if scheme == Scheme::Base && left_all.is_empty() && right_all.is_empty() {
        return Err(MaskError::EmptyContext(ctx.context_id.clone()));
    }

    let seps = scheme.layout_separators();
    let reserve = 1 + seps;
    // NoContext still sizes the window so its budget matches Global's.
    let (left_kept, right_kept) = balance(
        left_all.len().min(cfg.side_window),
        right_all.len().min(cfg.side_window),
        |l, r| l + r <= cfg.context_limit && l + r + reserve <= cfg.total_limit,
    );
    let window = if scheme.has_mask() {
        WindowInfo {
            left_available: left_all.len(),
            right_available: right_all.len(),
            left_kept,
            right_kept,
        }
    } else {
        WindowInfo::default()
    };

    let mut context: Vec<String> = Vec::new();
    if scheme.has_mask() {
        context.extend_from_slice(&left_all[left_all.len() - left_kept..]);
        context.push(cfg.mask_token.clone());
        context.extend_from_slice(&right_all[..right_kept]);
    }

    let sep = || cfg.separator.clone();
    let tokens: Vec<String> = if scheme == Scheme::Base {
        context
    } else {
        let citing = citing.expect("checked above");
        let mut title = tokens_without_markers(tok, &citing.title, cfg);
        let mut abstract_ = tokens_without_markers(tok, &citing.abstract_text, cfg);
        abstract_.truncate(cfg.abstract_limit);
        // Lay out the Global input (AllIncluding also reserves its extra
        // separators) and trim abstract first, then title.
        let context_len = left_kept + right_kept + 1;
        let used = context_len + seps;
        let budget = cfg.total_limit.saturating_sub(used);
        let over = (title.len() + abstract_.len()).saturating_sub(budget);
        let cut_abstract = over.min(abstract_.len());
        abstract_.truncate(abstract_.len() - cut_abstract);
        title.truncate(title.len() - (over - cut_abstract));

        let mut out = Vec::new();
        match scheme {
            Scheme::Global | Scheme::AllIncluding => {
                out.extend(context);
                out.push(sep());
                out.extend(title);
                out.push(sep());
                out.extend(abstract_);
            }
            Scheme::NoTitle => {
                out.extend(context);
                out.push(sep());
                out.extend(abstract_);
            }
            Scheme::NoAbstract => {
                out.extend(context);
                out.push(sep());
                out.extend(title);
            }
            Scheme::NoContext => {
                out.extend(title);
                out.push(sep());
                out.extend(abstract_);
            }
            Scheme::Base => unreachable!(),
        }
        if scheme == Scheme::AllIncluding {
            let cited = cited.expect("checked above");
            let mut cited_title = tokens_without_markers(tok, &cited.title, cfg);
            let mut cited_abstract = tokens_without_markers(tok, &cited.abstract_text, cfg);
            cited_abstract.truncate(cfg.abstract_limit);
            let room = cfg.total_limit.saturating_sub(out.len() + 2);
            let over = (cited_title.len() + cited_abstract.len()).saturating_sub(room);
            let cut_abstract = over.min(cited_abstract.len());
            cited_abstract.truncate(cited_abstract.len() - cut_abstract);
            cited_title.truncate(cited_title.len() - (over - cut_abstract));
            out.push(sep());
            out.extend(cited_title);
            out.push(sep());
            out.extend(cited_abstract);
        }
        out
    };

    Ok(Built {
        example: MaskedExample {
            context_id: ctx.context_id.clone(),
            scheme,
            input_text: tok.detokenize(&tokens),
            target_text: ctx.ground_truth.canonical(),
            token_count: tokens.len(),
        },
        window,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskReject {
    pub context_id: String,
    pub reason: String,
    pub detail: String,
}

/// Counts written next to a masked dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildManifest {
    pub config: Option<SchemeConfig>,
    pub requested: usize,
    pub per_scheme: BTreeMap<Scheme, usize>,
    pub rejected: usize,
    /// Requested ids with no preprocessed context.
    pub missing: usize,
    /// Examples whose context window dropped tokens.
    pub truncated: usize,
    pub off_center: usize,
    pub max_token_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetBuild {
    pub examples: Vec<MaskedExample>,
    pub rejects: Vec<MaskReject>,
    pub manifest: BuildManifest,
}

/// Build examples for the given context ids, sorted by context id.
pub fn build_dataset(
    ids: &[String],
    contexts: &[LocalContext],
    papers: &[PaperMeta],
    cfg: &SchemeConfig,
    tok: &dyn Tokenizer,
) -> Result<DatasetBuild, MaskError> {
    cfg.validate()?;
    let by_id: HashMap<&str, &LocalContext> = contexts.iter().map(|c| (c.context_id.as_str(), c)).collect();
    let paper_by_id: HashMap<&str, &PaperMeta> = papers.iter().map(|p| (p.paper_id.as_str(), p)).collect();
    let mut paper_by_key: HashMap<_, &PaperMeta> = HashMap::new();
    for paper in papers {
        if let Some(key) = paper.citation_key() {
            paper_by_key.entry(key).or_insert(paper);
        }
    }

    let mut wanted: Vec<&str> = ids.iter().map(String::as_str).collect();
    wanted.sort_unstable();
    wanted.dedup();

    let results: Vec<Option<Result<Built, MaskError>>> = wanted
        .par_iter()
        .map(|id| {
            let ctx = by_id.get(id)?;
            let citing = ctx.citing_paper_id.as_deref().and_then(|p| paper_by_id.get(p).copied());
            let cited = ctx
                .cited_paper_id
                .as_deref()
                .and_then(|p| paper_by_id.get(p).copied())
                .or_else(|| paper_by_key.get(&ctx.key()).copied());
            Some(build(ctx, MetaInputs { citing, cited }, cfg, tok))
        })
        .collect();

    let mut out = DatasetBuild {
        manifest: BuildManifest {
            config: Some(cfg.clone()),
            requested: wanted.len(),
            ..Default::default()
        },
        ..Default::default()
    };
    for (id, result) in wanted.iter().zip(results) {
        match result {
            None => out.manifest.missing += 1,
            Some(Ok(built)) => {
                out.manifest.truncated += usize::from(built.window.truncated());
                out.manifest.off_center += usize::from(built.window.off_center());
                out.manifest.max_token_count = out.manifest.max_token_count.max(built.example.token_count);
                *out.manifest.per_scheme.entry(built.example.scheme).or_default() += 1;
                out.examples.push(built.example);
            }
            Some(Err(e)) => {
                out.manifest.rejected += 1;
                out.rejects.push(MaskReject {
                    context_id: (*id).to_owned(),
                    reason: e.code().to_owned(),
                    detail: e.to_string(),
                });
            }
        }
    }
    if out.manifest.off_center > 0 {
        log::warn!("{} examples have an off-center mask", out.manifest.off_center);
    }
    Ok(out)
}
