//! Command-line driver: `preprocess`, `train`, `eval` and `score`.

pub mod artifacts;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use noge_core::kg_data::Split;
use noge_core::{AdjacencyKind, DecoderKind, EncoderKind, SelfLoopMode};

pub use crate::config::{Overrides, RunConfig};
pub use crate::error::{CliError, CliResult, EXIT_RUNTIME, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "noge", version, about = "Knowledge-graph link prediction on a co-occurrence weighted Levi graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse train/valid/test.txt and write vocabulary, encoded splits, adjacency and manifest.
    Preprocess {
        #[command(flatten)]
        run: RunArgs,
        /// Also write adjacency.tsv (row, col, weight).
        #[arg(long)]
        dump_adjacency: bool,
    },
    /// Train and write best.ckpt, last.ckpt and train.log.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Continue from last.ckpt in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Filtered MRR / Hits@k of a checkpoint.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to best.ckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = ["valid", "test"])]
        split: String,
    },
    /// Score "h r t", or rank entities for "h r ?" / "? r t".
    Score {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Whitespace-separated query, e.g. "Q42 P27 ?".
        query: String,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_parser = ["dualqgnn", "qgnn", "gcn"])]
    pub encoder: Option<String>,
    #[arg(long, value_parser = ["quate", "distmult"])]
    pub decoder: Option<String>,
    #[arg(long, value_parser = ["weighted", "binary"])]
    pub adjacency: Option<String>,
    #[arg(long, value_parser = ["paper_literal", "single"])]
    pub self_loop_mode: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub label_smoothing: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            dataset_dir: self.dataset_dir.clone(),
            output_dir: self.output_dir.clone(),
            encoder: self.encoder.as_deref().map(|s| s.parse::<EncoderKind>().expect("restricted by clap")),
            decoder: self.decoder.as_deref().map(|s| s.parse::<DecoderKind>().expect("restricted by clap")),
            adjacency: self.adjacency.as_deref().map(|s| match s {
                "binary" => AdjacencyKind::Binary,
                _ => AdjacencyKind::Weighted,
            }),
            self_loop_mode: self.self_loop_mode.as_deref().map(|s| match s {
                "single" => SelfLoopMode::Single,
                _ => SelfLoopMode::PaperLiteral,
            }),
            dim: self.dim,
            layers: self.layers,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            eval_every: self.eval_every,
            label_smoothing: self.label_smoothing,
            seed: self.seed,
        }
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        config::resolve(self.config.as_deref(), &self.overrides())
    }
}

/// Runs one parsed command, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Preprocess { run, dump_adjacency } => {
            commands::cmd_preprocess(&run.resolve()?, dump_adjacency, out)?;
        }
        Command::Train { run, resume } => {
            commands::cmd_train(&run.resolve()?, resume, out)?;
        }
        Command::Eval { run, checkpoint, split } => {
            let split: Split = split.parse()?;
            commands::cmd_eval(&run.resolve()?, checkpoint.as_deref(), split, out)?;
        }
        Command::Score { run, checkpoint, query, top_k } => {
            let query = query.parse()?;
            commands::cmd_score(&run.resolve()?, checkpoint.as_deref(), &query, top_k, out)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
