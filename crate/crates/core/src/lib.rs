//! Data engineering, retrieval baseline and evaluation for generative local
//! citation recommendation.
//!
//! The pipeline runs: [`corpus`] ingestion and splitting, [`maskbuilder`]
//! input construction, [`bm25`] retrieval, then [`evalcore`] ranking metrics
//! and [`halometer`] hallucination analysis over prediction files.

pub mod bm25;
pub mod citegrammar;
pub mod corpus;
pub mod evalcore;
pub mod halometer;
pub mod jsonl;
pub mod maskbuilder;
pub mod report;

pub use citegrammar::{CitationToken, FormatError, NormalizedKey, OverlapReport};
pub use corpus::{CitationPool, Dataset, LocalContext, PaperMeta, SplitManifest};
pub use evalcore::{EvalReport, PredictionRecord};
pub use halometer::{HallucinationBreakdown, HallucinationLabel};
pub use maskbuilder::{MaskedExample, Scheme};
