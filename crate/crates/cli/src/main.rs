//! Batch CLI tying the labeling pipeline together. Stages communicate only
//! through files with recorded hashes, so a CI bot can detect exactly what a
//! change invalidates and rerun just that.
//!
//! Exit codes: 0 success, 2 parse/usage failure, 3 validation failure
//! (duplicate ids, stale inputs, unfit model, ...), 4 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

#[derive(Parser)]
#[command(
    name = "replabel",
    version,
    about = "Programmatic labeling for software repository artifacts"
)]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct FitFlags {
    /// Convergence tolerance on the max parameter change.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Iteration cap; hitting it is a warning, not an error.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,

    /// Freeze the positive-class prior instead of fitting it.
    #[arg(long)]
    class_balance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a heuristic registry to a dataset, writing the vote matrix.
    Apply {
        /// Commit dataset (line-delimited records).
        #[arg(long)]
        commits: PathBuf,
        /// Issue dataset, enabling issue-targeting heuristics.
        #[arg(long)]
        issues: Option<PathBuf>,
        /// Directory of heuristic spec files.
        #[arg(long, env = "REPLABEL_HEURISTICS")]
        heuristics: PathBuf,
        /// Task definition scoping the registry; defaults to all heuristics.
        #[arg(long)]
        task: Option<PathBuf>,
        /// Dangling issue references: strict | drop | keep.
        #[arg(long, default_value = "keep")]
        link_policy: String,
        /// Dataset format id.
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long)]
        out: PathBuf,
        /// Recorded in the manifest for reproducibility.
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Fit the generative label model on a vote matrix.
    Train {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fit: FitFlags,
        /// Task definition; supplies a frozen class balance if set there.
        #[arg(long)]
        task: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Produce probabilistic labels from a fitted model and a matrix.
    Label {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Score probabilistic labels (or a keyword baseline) against gold labels.
    Eval {
        /// Probabilistic labels produced by `label`.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Evaluate a bundled keyword baseline instead: gitcproc | tufano.
        #[arg(long)]
        baseline: Option<String>,
        /// Commit dataset (required with --baseline).
        #[arg(long)]
        commits: Option<PathBuf>,
        /// Directory holding baseline keyword files.
        #[arg(long, default_value = "baselines")]
        baselines_dir: PathBuf,
        #[arg(long, default_value = "jsonl")]
        format: String,
        /// Gold labels: line-delimited {artifact_id, label}.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        task: Option<PathBuf>,
        /// Fallback class for abstained rows: positive | negative.
        #[arg(long)]
        fallback: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Per-heuristic coverage / overlap / conflict (and accuracy with gold).
    Diagnostics {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Render the metrics report comparing a head run against a base run.
    Report {
        /// Vote matrix of the head (new) registry.
        #[arg(long)]
        matrix: PathBuf,
        /// Vote matrix of the base registry; enables deltas and
        /// leave-one-out contributions for new heuristics.
        #[arg(long)]
        base_matrix: Option<PathBuf>,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        task: Option<PathBuf>,
        #[command(flatten)]
        fit: FitFlags,
        /// Markdown output path; a JSON twin goes beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Export a labeled training dataset for a task.
    Export {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        commits: PathBuf,
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long)]
        task: Option<PathBuf>,
        /// soft | hard | model-labeled-only.
        #[arg(long, default_value = "hard")]
        mode: String,
        /// Carry author and timestamp into the export.
        #[arg(long)]
        include_meta: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Data-quality report over a dataset (never mutates anything).
    Validate {
        #[arg(long)]
        commits: PathBuf,
        #[arg(long)]
        issues: Option<PathBuf>,
        #[arg(long, default_value = "keep")]
        link_policy: String,
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use replabel_core::ErrorCategory;
        match self {
            CliError::Usage(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Parse => 2,
                ErrorCategory::Validation => 3,
                ErrorCategory::Internal => 4,
            },
        }
    }
}
