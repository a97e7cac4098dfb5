use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;

use citeharness_core::bm25::{self, Analyzer, Bm25Params, DocumentUnit};
use citeharness_core::corpus::{self, DatasetDir, CONTEXTS_FILE, PAPERS_FILE, REJECTS_FILE};
use citeharness_core::evalcore::{self, BootstrapCi};
use citeharness_core::halometer::{self, ConditionedDenominator};
use citeharness_core::jsonl;
use citeharness_core::maskbuilder::{self, SchemeConfig, Tokenizer, VocabTokenizer, WhitespaceTokenizer};
use citeharness_core::report;
use citeharness_core::{
    CitationToken, Dataset, EvalReport, HallucinationBreakdown, MaskedExample, PredictionRecord, Scheme, SplitManifest,
};

use crate::config::{check_k, PipelineConfig, DEFAULT_RATIO, DEFAULT_SEED, DEFAULT_TOPK};
use crate::error::CliError;
use crate::manifest::{write_json, write_text, RunManifest};

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")))
    }
}

fn dataset_inputs(m: &mut RunManifest, dir: &Path) -> Result<(), CliError> {
    require_file(&dir.join(CONTEXTS_FILE))?;
    m.input(&dir.join(CONTEXTS_FILE))?;
    let papers = dir.join(PAPERS_FILE);
    if papers.is_file() {
        m.input(&papers)?;
    }
    Ok(())
}

fn load_dataset(dir: &Path) -> Result<DatasetDir, CliError> {
    let data = DatasetDir::load(dir)?;
    if data.contexts.is_empty() {
        return Err(CliError::Validation(format!("{}: dataset has no contexts", dir.display())));
    }
    Ok(data)
}

fn tokenizer(vocab: Option<&Path>, cfg: &SchemeConfig) -> Result<Box<dyn Tokenizer>, CliError> {
    Ok(match vocab {
        Some(path) => Box::new(
            VocabTokenizer::from_file(path)
                .map_err(|e| CliError::io(path, e))?
                .with_specials([cfg.mask_token.clone(), cfg.separator.clone()]),
        ),
        None => Box::new(WhitespaceTokenizer),
    })
}

fn k_list(flag: &[usize], cfg: &PipelineConfig) -> Result<Vec<usize>, CliError> {
    let ks = if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(ks) = &cfg.k_values {
        ks.clone()
    } else {
        vec![DEFAULT_TOPK]
    };
    let mut ks = ks.into_iter().map(check_k).collect::<Result<Vec<_>, _>>()?;
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn write_one_or_many<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    match items {
        [single] => write_json(path, single),
        many => write_json(path, &many),
    }
}

/// Read a JSON file holding one record or a list of them.
fn read_one_or_many<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let value: serde_json::Value = jsonl::read_json(path)?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        single => vec![single],
    };
    items
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))))
        .collect()
}

// ---------------------------------------------------------------- preprocess

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    /// Raw context records (JSONL).
    #[arg(long)]
    contexts: PathBuf,
    /// Raw paper metadata (JSONL).
    #[arg(long)]
    papers: Option<PathBuf>,
    /// Dataset name stamped on every context.
    #[arg(long, default_value = "custom")]
    dataset: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct PreprocessStats {
    ingested_contexts: usize,
    kept_contexts: usize,
    rejected_contexts: usize,
    ingested_papers: usize,
    kept_papers: usize,
    rejected_papers: usize,
    repaired_contexts: usize,
    reject_reasons: std::collections::BTreeMap<String, usize>,
}

pub fn preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let dataset: Dataset = a.dataset.parse().map_err(CliError::Usage)?;
    require_file(&a.contexts)?;
    if let Some(p) = &a.papers {
        require_file(p)?;
    }
    let mut m = RunManifest::new("preprocess", &a);
    m.input(&a.contexts)?;
    if let Some(p) = &a.papers {
        m.input(p)?;
    }
    let data = corpus::ingest_files(&a.contexts, a.papers.as_deref(), dataset)?;
    corpus::save_dataset(&a.out, &data)?;
    for name in [CONTEXTS_FILE, PAPERS_FILE, REJECTS_FILE] {
        m.output(&a.out.join(name))?;
    }
    let mut reasons = std::collections::BTreeMap::new();
    for r in data.all_rejects() {
        *reasons.entry(r.reason.code().to_owned()).or_insert(0) += 1;
    }
    let stats = PreprocessStats {
        ingested_contexts: data.ingested_contexts,
        kept_contexts: data.contexts.len(),
        rejected_contexts: data.rejects.len(),
        ingested_papers: data.ingested_papers,
        kept_papers: data.papers.len(),
        rejected_papers: data.paper_rejects.len(),
        repaired_contexts: data.repairs.len(),
        reject_reasons: reasons,
    };
    println!(
        "kept {} of {} contexts, {} rejected, {} repaired",
        stats.kept_contexts, stats.ingested_contexts, stats.rejected_contexts, stats.repaired_contexts
    );
    m.stats(stats).write_for(&a.out.join(CONTEXTS_FILE))?;
    Ok(())
}

// --------------------------------------------------------------------- split

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Preprocessed dataset directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction.
    #[arg(long)]
    ratio: Option<f64>,
    /// Also cut a validation part of this fraction.
    #[arg(long)]
    valid_ratio: Option<f64>,
    /// Output split manifest (JSON).
    #[arg(long)]
    out: PathBuf,
}

pub fn split(a: SplitArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let ratio = a.ratio.or(cfg.ratio).unwrap_or(DEFAULT_RATIO);
    let valid = a.valid_ratio.or(cfg.valid_ratio);
    let mut m = RunManifest::new(
        "split",
        serde_json::json!({ "data": a.data, "seed": seed, "ratio": ratio, "valid_ratio": valid }),
    );
    dataset_inputs(&mut m, &a.data)?;
    let data = load_dataset(&a.data)?;
    let manifest = match valid {
        Some(v) => corpus::split_three(&data.contexts, seed, ratio, v)?,
        None => corpus::split(&data.contexts, seed, ratio)?,
    };
    write_json(&a.out, &manifest)?;
    m.output(&a.out)?;
    println!(
        "train {} / valid {} / test {}",
        manifest.train_ids.len(),
        manifest.valid_ids.len(),
        manifest.test_ids.len()
    );
    m.write_for(&a.out)?;
    Ok(())
}

// --------------------------------------------------------------- build-masks

#[derive(Debug, Args, Serialize)]
pub struct SchemeArgs {
    /// base, global, no_context, no_title, no_abstract or all_including.
    #[arg(long)]
    scheme: Option<String>,
    /// Subword vocabulary (one entry per line); whitespace tokens otherwise.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    total_limit: Option<usize>,
    #[arg(long)]
    context_limit: Option<usize>,
    #[arg(long)]
    side_window: Option<usize>,
    #[arg(long)]
    abstract_limit: Option<usize>,
}

impl SchemeArgs {
    fn resolve(&self, cfg: &PipelineConfig, dataset: Dataset) -> Result<(SchemeConfig, Option<PathBuf>), CliError> {
        let name = self.scheme.as_deref().or(cfg.scheme.as_deref()).unwrap_or("global");
        let mut sc = SchemeConfig::for_dataset(dataset, parse_scheme(name)?);
        if let Some(v) = self.total_limit.or(cfg.total_limit) {
            sc.total_limit = v;
        }
        if let Some(v) = self.context_limit.or(cfg.context_limit) {
            sc.context_limit = v;
        }
        if let Some(v) = self.side_window.or(cfg.side_window) {
            sc.side_window = v;
        }
        if let Some(v) = self.abstract_limit.or(cfg.abstract_limit) {
            sc.abstract_limit = v;
        }
        sc.validate()?;
        Ok((sc, self.vocab.clone().or_else(|| cfg.vocab.clone())))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BuildMasksArgs {
    #[arg(long)]
    data: PathBuf,
    /// Split manifest; all contexts are used when absent.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Split part: train, valid or test.
    #[arg(long, default_value = "test")]
    part: String,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Output masked examples (JSONL).
    #[arg(long)]
    out: PathBuf,
}

fn split_ids(data: &DatasetDir, split: Option<&Path>, part: &str) -> Result<Vec<String>, CliError> {
    match split {
        None => Ok(data.contexts.iter().map(|c| c.context_id.clone()).collect()),
        Some(path) => {
            let manifest: SplitManifest = jsonl::read_json(path)?;
            manifest
                .part(part)
                .map(<[String]>::to_vec)
                .ok_or_else(|| CliError::Usage(format!("unknown split part {part:?}")))
        }
    }
}

fn build_examples(
    data: &DatasetDir,
    ids: &[String],
    sc: &SchemeConfig,
    vocab: Option<&Path>,
) -> Result<maskbuilder::DatasetBuild, CliError> {
    let tok = tokenizer(vocab, sc)?;
    Ok(maskbuilder::build_dataset(ids, &data.contexts, &data.papers, sc, tok.as_ref())?)
}

pub fn build_masks(a: BuildMasksArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut m = RunManifest::new("build-masks", serde_json::Value::Null);
    dataset_inputs(&mut m, &a.data)?;
    if let Some(s) = &a.split {
        m.input(s)?;
    }
    let data = load_dataset(&a.data)?;
    let (sc, vocab) = a.scheme.resolve(cfg, data.dataset())?;
    if let Some(v) = &vocab {
        m.input(v)?;
    }
    m.config = serde_json::json!({ "data": a.data, "split": a.split, "part": a.part, "scheme": sc, "vocab": vocab });
    let ids = split_ids(&data, a.split.as_deref(), &a.part)?;
    let built = build_examples(&data, &ids, &sc, vocab.as_deref())?;
    jsonl::write(&a.out, &built.examples)?;
    m.output(&a.out)?;
    let mut rejects = a.out.as_os_str().to_owned();
    rejects.push(".rejects.jsonl");
    let rejects = PathBuf::from(rejects);
    jsonl::write(&rejects, &built.rejects)?;
    m.output(&rejects)?;
    println!(
        "{} examples, {} rejected, {} truncated",
        built.examples.len(),
        built.manifest.rejected,
        built.manifest.truncated
    );
    m.stats(&built.manifest).write_for(&a.out)?;
    Ok(())
}

// ------------------------------------------------------------------ retrieve

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum UnitArg {
    CitedPaper,
    CitingContexts,
}

#[derive(Debug, Args, Serialize)]
pub struct RetrieveArgs {
    #[arg(long)]
    data: PathBuf,
    /// Masked examples to use as queries. Built on the fly from `--split` otherwise.
    #[arg(long)]
    masked: Option<PathBuf>,
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    part: String,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    topk: Option<usize>,
    /// What a pool entry's document is made of.
    #[arg(long, value_enum, default_value = "cited-paper")]
    unit: UnitArg,
    /// Output predictions (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct RetrieveStats {
    queries: usize,
    pool: usize,
    empty_documents: usize,
}

pub fn retrieve(a: RetrieveArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut m = RunManifest::new("retrieve", serde_json::Value::Null);
    dataset_inputs(&mut m, &a.data)?;
    for p in [&a.masked, &a.split].into_iter().flatten() {
        require_file(p)?;
        m.input(p)?;
    }
    let data = load_dataset(&a.data)?;
    let (sc, vocab) = a.scheme.resolve(cfg, data.dataset())?;
    let params = Bm25Params {
        k1: a.k1.or(cfg.k1).unwrap_or(Bm25Params::default().k1),
        b: a.b.or(cfg.b).unwrap_or(Bm25Params::default().b),
    };
    let topk = check_k(a.topk.or(cfg.topk).unwrap_or(DEFAULT_TOPK))?;
    let unit = match a.unit {
        UnitArg::CitedPaper => DocumentUnit::CitedPaper,
        UnitArg::CitingContexts => DocumentUnit::CitingContexts,
    };
    if unit == DocumentUnit::CitingContexts && a.split.is_none() {
        return Err(CliError::Usage("--unit citing-contexts needs --split".into()));
    }
    m.config = serde_json::json!({
        "data": a.data, "masked": a.masked, "split": a.split, "part": a.part,
        "scheme": sc, "vocab": vocab, "params": params, "topk": topk, "unit": a.unit,
    });

    let examples: Vec<MaskedExample> = match &a.masked {
        Some(path) => jsonl::read(path)?,
        None => {
            let ids = split_ids(&data, a.split.as_deref(), &a.part)?;
            build_examples(&data, &ids, &sc, vocab.as_deref())?.examples
        }
    };
    let train: Vec<_> = match (unit, &a.split) {
        (DocumentUnit::CitingContexts, Some(path)) => {
            let manifest: SplitManifest = jsonl::read_json(path)?;
            let train: std::collections::HashSet<&String> = manifest.train_ids.iter().collect();
            data.contexts.iter().filter(|c| train.contains(&c.context_id)).cloned().collect()
        }
        _ => Vec::new(),
    };
    let pool = data.pool();
    let index = bm25::build_index(&pool, &data.papers, &train, &Analyzer::default(), unit)?;
    let markers = (sc.mask_token.as_str(), sc.separator.as_str());
    let preds: Vec<PredictionRecord> = {
        use rayon::prelude::*;
        examples
            .par_iter()
            .map(|ex| bm25::retrieve(ex, &index, topk, params, markers).to_prediction())
            .collect()
    };
    jsonl::write(&a.out, &preds)?;
    m.output(&a.out)?;
    println!("{} queries over {} candidates", preds.len(), index.len());
    m.stats(RetrieveStats {
        queries: preds.len(),
        pool: index.len(),
        empty_documents: index.empty_documents,
    })
    .write_for(&a.out)?;
    Ok(())
}

// -------------------------------------------------------- ingest-predictions

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Prediction file from any generator (JSONL with context_id and predictions).
    #[arg(long)]
    input: PathBuf,
    /// Required list length; lists are cut to it. Defaults to the first record's length.
    #[arg(long)]
    k: Option<usize>,
    /// Dataset directory to check context ids against.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub fn ingest_predictions(a: IngestArgs) -> Result<(), CliError> {
    require_file(&a.input)?;
    let mut m = RunManifest::new("ingest-predictions", &a);
    m.input(&a.input)?;
    let mut records: Vec<PredictionRecord> = jsonl::read(&a.input)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!("{}: no prediction records", a.input.display())));
    }
    let k = check_k(a.k.unwrap_or(records[0].predictions.len()))?;
    records.sort_by(|x, y| x.context_id.cmp(&y.context_id));
    for pair in records.windows(2) {
        if pair[0].context_id == pair[1].context_id {
            return Err(CliError::Validation(format!("duplicate context {}", pair[0].context_id)));
        }
    }
    for r in &mut records {
        if r.predictions.len() < k {
            return Err(CliError::Validation(format!(
                "context {} has {} predictions, expected {k}",
                r.context_id,
                r.predictions.len()
            )));
        }
        r.predictions.truncate(k);
    }
    if let Some(dir) = &a.dataset {
        dataset_inputs(&mut m, dir)?;
        let gts = load_dataset(dir)?.ground_truths();
        if let Some(r) = records.iter().find(|r| !gts.contains_key(&r.context_id)) {
            return Err(CliError::Validation(format!("no ground truth for context {}", r.context_id)));
        }
    }
    jsonl::write(&a.out, &records)?;
    m.output(&a.out)?;
    println!("{} records at k = {k}", records.len());
    m.write_for(&a.out)?;
    Ok(())
}

// ------------------------------------------------------------------ evaluate

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    preds: PathBuf,
    /// Preprocessed dataset directory holding the ground truth.
    #[arg(long)]
    dataset: PathBuf,
    /// Cut-off; repeat for several.
    #[arg(long)]
    k: Vec<usize>,
    /// System label used by `report`.
    #[arg(long)]
    system: Option<String>,
    /// Bootstrap resamples for confidence intervals.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    report: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapCi>,
}

pub fn evaluate(a: EvaluateArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    require_file(&a.preds)?;
    let ks = k_list(&a.k, cfg)?;
    let system = a.system.clone().or_else(|| cfg.system.clone());
    let bootstrap = a.bootstrap.or(cfg.bootstrap);
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let confidence = a.confidence.or(cfg.confidence).unwrap_or(0.95);
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CliError::Usage(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let mut m = RunManifest::new(
        "evaluate",
        serde_json::json!({
            "preds": a.preds, "dataset": a.dataset, "k": ks, "system": system,
            "bootstrap": bootstrap, "seed": seed, "confidence": confidence,
        }),
    );
    m.input(&a.preds)?;
    dataset_inputs(&mut m, &a.dataset)?;
    let data = load_dataset(&a.dataset)?;
    let preds: Vec<PredictionRecord> = jsonl::read(&a.preds)?;
    let gts: HashMap<String, CitationToken> = data.ground_truths();
    let mut outputs = Vec::with_capacity(ks.len());
    for &k in &ks {
        let report = evalcore::evaluate(&preds, &gts, k)?.labelled(system.clone(), Some(data.dataset().name().to_owned()));
        let ci = match bootstrap {
            Some(n) => Some(evalcore::bootstrap_ci(&report, n, seed, confidence)?),
            None => None,
        };
        println!(
            "k={k} n={} R@k={:.4} EM={:.4} MRR={:.4}",
            report.n, report.recall_at_k, report.exact_match, report.mrr
        );
        outputs.push(EvalOutput { report, bootstrap: ci });
    }
    write_one_or_many(&a.out, &outputs)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

// --------------------------------------------------------------- hallucinate

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DenominatorArg {
    Qualifying,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct HallucinateArgs {
    #[arg(long)]
    preds: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Cut-off; repeat for several.
    #[arg(long)]
    k: Vec<usize>,
    #[arg(long)]
    system: Option<String>,
    /// Denominator of the conditioned rates.
    #[arg(long, value_enum)]
    denominator: Option<DenominatorArg>,
    #[arg(long)]
    out: PathBuf,
}

pub fn hallucinate(a: HallucinateArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    require_file(&a.preds)?;
    let ks = k_list(&a.k, cfg)?;
    let system = a.system.clone().or_else(|| cfg.system.clone());
    let denominator = match (a.denominator, cfg.denominator.as_deref()) {
        (Some(DenominatorArg::All), _) | (None, Some("all")) => ConditionedDenominator::All,
        (Some(DenominatorArg::Qualifying), _) | (None, None | Some("qualifying")) => ConditionedDenominator::Qualifying,
        (None, Some(other)) => return Err(CliError::Validation(format!("unknown denominator {other:?}"))),
    };
    let mut m = RunManifest::new(
        "hallucinate",
        serde_json::json!({
            "preds": a.preds, "dataset": a.dataset, "k": ks, "system": system, "denominator": denominator,
        }),
    );
    m.input(&a.preds)?;
    dataset_inputs(&mut m, &a.dataset)?;
    let data = load_dataset(&a.dataset)?;
    let preds: Vec<PredictionRecord> = jsonl::read(&a.preds)?;
    let gts = data.ground_truths();
    let pool = data.pool();
    let mut outputs = Vec::with_capacity(ks.len());
    for &k in &ks {
        let b = halometer::analyze(&preds, &gts, &pool, k, denominator)?
            .labelled(system.clone(), Some(data.dataset().name().to_owned()));
        if !b.identities.all_hold() {
            return Err(CliError::Validation(format!("rate identities violated at k = {k}: {:?}", b.identities)));
        }
        println!(
            "k={k} n={} MaHR={:.2}% partial={:.2}% wrong-format={:.2}% other={:.2}%",
            b.n, b.percent.mahr, b.percent.mahr_partial, b.percent.wrong_format, b.percent.other_hal
        );
        outputs.push(b);
    }
    write_one_or_many(&a.out, &outputs)?;
    m.output(&a.out)?;
    m.write_for(&a.out)?;
    Ok(())
}

// -------------------------------------------------------------------- report

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Output files of `evaluate`.
    #[arg(long = "eval", num_args = 1..)]
    evals: Vec<PathBuf>,
    /// Output files of `hallucinate`.
    #[arg(long = "halluc", num_args = 1..)]
    hallucs: Vec<PathBuf>,
    /// Machine-readable tables (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the text tables here.
    #[arg(long)]
    text: Option<PathBuf>,
}

pub fn report(a: ReportArgs) -> Result<(), CliError> {
    if a.evals.is_empty() && a.hallucs.is_empty() {
        return Err(CliError::Usage("report needs at least one --eval or --halluc file".into()));
    }
    let mut m = RunManifest::new("report", &a);
    let mut reports: Vec<EvalReport> = Vec::new();
    for p in &a.evals {
        require_file(p)?;
        m.input(p)?;
        reports.extend(read_one_or_many::<EvalReport>(p)?);
    }
    let mut breakdowns: Vec<HallucinationBreakdown> = Vec::new();
    for p in &a.hallucs {
        require_file(p)?;
        m.input(p)?;
        breakdowns.extend(read_one_or_many::<HallucinationBreakdown>(p)?);
    }
    let built = report::build(&reports, &breakdowns);
    let text = built.render();
    print!("{text}");
    write_json(&a.out, &built)?;
    m.output(&a.out)?;
    if let Some(t) = &a.text {
        write_text(t, &text)?;
        m.output(t)?;
    }
    m.write_for(&a.out)?;
    Ok(())
}
