//! `tricheck` command-line interface.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tricheck", version, about = "Zero-shot claim verification over triples")]
pub struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the voting seed and the session-update seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the scorer named in the config.
    #[arg(long, global = true, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// Sidecar URL for the remote scorer and remote embeddings.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Baseline,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VotingArg {
    Max,
    Majority,
    WeightedSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    GoldRandom,
    GoldRetrieved,
    Retrieved,
}

/// Where sentences come from: a saved index or a corpus file indexed on the fly.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SentenceSource {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

/// Overrides shared by the commands that run the pipeline.
#[derive(Debug, Args)]
pub struct RunOverrides {
    #[arg(long, value_enum)]
    pub voting: Option<VotingArg>,
    /// Disable universal-schema gap filling even if the config enables it.
    #[arg(long)]
    pub no_uschema: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a sentence index from a corpus file.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a universal-schema model on a knowledge-graph TSV.
    TrainUschema {
        #[arg(long)]
        kg: PathBuf,
        /// Held-out facts for early stopping; a slice of the KG is used when omitted.
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// `hashed-bow-<d>` or `remote`.
        #[arg(long, default_value = "hashed-bow-64")]
        embedder: String,
        /// Optimizer settings (TOML); individual flags below take precedence.
        #[arg(long)]
        train_config: Option<PathBuf>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Verify a single claim.
    Verify {
        #[command(flatten)]
        source: SentenceSource,
        /// Claim text.
        claim: String,
        #[command(flatten)]
        overrides: RunOverrides,
        /// Print the trace as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a labelled dataset.
    Evaluate {
        #[command(flatten)]
        source: SentenceSource,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "retrieved")]
        regime: RegimeArg,
        #[command(flatten)]
        overrides: RunOverrides,
        /// Write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write per-claim traces (JSONL) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print JSON instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Grid-search the three thresholds on a dev set.
    Tune {
        #[command(flatten)]
        source: SentenceSource,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "retrieved")]
        regime: RegimeArg,
        #[command(flatten)]
        overrides: RunOverrides,
        /// Comma-separated supports thresholds.
        #[arg(long, value_delimiter = ',')]
        supports: Option<Vec<f64>>,
        /// Comma-separated refutes thresholds.
        #[arg(long, value_delimiter = ',')]
        refutes: Option<Vec<f64>>,
        /// Comma-separated universal-schema thresholds.
        #[arg(long, value_delimiter = ',')]
        uschema: Option<Vec<f64>>,
        /// Points per axis for axes not given explicitly, spread over [0.1, 0.9].
        #[arg(long, default_value_t = 9)]
        steps: usize,
        /// Write the accuracy surface as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Pretty-print entries of a trace file.
    Trace {
        path: PathBuf,
        /// Only this claim.
        #[arg(long)]
        claim: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
