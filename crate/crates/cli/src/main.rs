mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, EXIT_USAGE};

/// Data preparation, BM25 retrieval and evaluation for author-date citation
/// recommendation.
#[derive(Debug, Parser)]
#[command(name = "citeharness", version, about)]
struct Cli {
    /// JSON file with default settings for the subcommands.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean raw context and paper records into a dataset directory.
    Preprocess(commands::PreprocessArgs),
    /// Partition a dataset's contexts into train and test ids.
    Split(commands::SplitArgs),
    /// Build masked model inputs for one scheme.
    BuildMasks(commands::BuildMasksArgs),
    /// Rank the citation pool with BM25 and write top-k predictions.
    Retrieve(commands::RetrieveArgs),
    /// Validate an external prediction file and write it in canonical form.
    IngestPredictions(commands::IngestArgs),
    /// Recall@k, exact match and MRR of a prediction file.
    Evaluate(commands::EvaluateArgs),
    /// Hallucination labels and rates of a prediction file.
    Hallucinate(commands::HallucinateArgs),
    /// Summary tables over evaluation and hallucination outputs.
    Report(commands::ReportArgs),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CITEHARNESS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CITEHARNESS_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Split(a) => commands::split(a, &cfg),
        Command::BuildMasks(a) => commands::build_masks(a, &cfg),
        Command::Retrieve(a) => commands::retrieve(a, &cfg),
        Command::IngestPredictions(a) => commands::ingest_predictions(a),
        Command::Evaluate(a) => commands::evaluate(a, &cfg),
        Command::Hallucinate(a) => commands::hallucinate(a, &cfg),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
