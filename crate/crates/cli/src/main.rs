mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::ErrorReport;

#[derive(Debug, Parser)]
#[command(name = "framekit", version, about = "Frame-semantic parsing workbench")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML manifest; command-line flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus file (JSON Lines) or FrameNet release directory.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Word vectors, text (`.txt`, `.vec`) or word2vec binary.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Dependency parses in CoNLL format.
    #[arg(long, global = true)]
    pub conll: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Predictions file (JSON Lines) for `score` and `analyze`.
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    /// Training corpus used by `analyze` for counts and coverage.
    #[arg(long, global = true)]
    pub train: Option<PathBuf>,
    /// Comma-separated POS tags of source LUs to paraphrase, e.g. `V,N`.
    #[arg(long, global = true)]
    pub pos_filter: Option<String>,
    /// Skip multi-lexeme LUs as sources and candidates.
    #[arg(long, global = true)]
    pub mwe_filter: bool,
    /// none, random-N, top-N or threshold-T.
    #[arg(long, global = true)]
    pub sem_filter: Option<String>,
    /// Cap on generated sentences per source sentence.
    #[arg(long, global = true)]
    pub max_per_source: Option<usize>,
    /// L2 strength [default: 1e-6].
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// AdaDelta decay [default: 0.95].
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// AdaDelta smoothing [default: 1e-6].
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Training epochs [default: 10].
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Beam width [default: 100].
    #[arg(long, global = true)]
    pub beam: Option<usize>,
    /// Seed for shuffling, random filters and bootstrap [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Add features conjoined with inherited frame elements.
    #[arg(long, global = true)]
    pub hierarchy: bool,
    /// Credit the gold frame in every annotation set's tallies.
    #[arg(long, global = true)]
    pub frame_credit: bool,
    /// Port for `serve`; FRAMEKIT_PORT takes precedence [default: 8080].
    #[arg(long, global = true)]
    pub port: Option<u16>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    Jsonl,
    Xml,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a corpus, report rejected records and write JSON Lines.
    Ingest {
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        /// Fail on the first malformed or invalid record.
        #[arg(long)]
        strict: bool,
        /// Also read lexicographic exemplars from an XML release.
        #[arg(long)]
        exemplars: bool,
        /// Documents held out as test; with --dev-docs, --out is a directory.
        #[arg(long, value_delimiter = ',')]
        test_docs: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        dev_docs: Vec<String>,
    },
    /// Print corpus counts.
    Stats,
    /// Generate paraphrases and write the augmented corpus.
    Augment,
    /// Train an argument identification model.
    Train,
    /// Predict arguments for every annotation set of the corpus.
    Predict,
    /// Score predictions against the corpus.
    Score {
        /// Second system's predictions for a paired bootstrap test.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
    },
    /// Write per-FE, febar, PT.GF, coverage and rank-frequency reports.
    Analyze,
    /// Serve valence queries over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.global, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport {
                error: e.kind(),
                message: e.to_string(),
            };
            eprintln!(
                "{}",
                serde_json::to_string(&report).expect("error report serializes")
            );
            ExitCode::FAILURE
        }
    }
}
