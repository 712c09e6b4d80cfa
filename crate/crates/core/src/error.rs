//! Error types shared across the toolkit.

use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure class. The CLI maps these onto exit codes so CI can
/// branch on the kind of failure without parsing messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// An input could not be read or decoded.
    Parse,
    /// Inputs decoded but violate a contract (duplicate ids, stale hashes, ...).
    Validation,
    /// Unexpected internal failure.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}{}: {message}", path.display(), fmt_line(line))]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("unknown dataset format `{format}` (expected `jsonl`)")]
    UnknownFormat { format: String },

    #[error("duplicate commit id `{id}` at line {line}")]
    DuplicateCommitId { id: String, line: usize },

    #[error("duplicate issue id `{id}` at line {line}")]
    DuplicateIssueId { id: String, line: usize },

    #[error("duplicate heuristic name `{name}` (defined in {first} and {second})")]
    DuplicateHeuristic {
        name: String,
        first: String,
        second: String,
    },

    #[error("invalid heuristic spec in {file}{}: {message}", fmt_name(name))]
    InvalidSpec {
        file: String,
        name: Option<String>,
        message: String,
    },

    #[error("commit `{commit_id}` references unknown issue `{issue_id}`")]
    DanglingIssueRef { commit_id: String, issue_id: String },

    #[error("unknown heuristic `{name}`")]
    UnknownHeuristic { name: String },

    #[error("task `{task}` selects no heuristics")]
    EmptyTaskSelection { task: String },

    #[error("invalid task `{task}`: {message}")]
    InvalidTask { task: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label matrix has no columns")]
    EmptyMatrix,

    #[error("cannot fit label model: every row of the matrix is all-abstain")]
    AllAbstainMatrix,

    #[error("no gold label for artifact `{id}`")]
    GoldIdMissing { id: String },

    #[error("gold label set is empty")]
    EmptyGold,

    #[error("nothing to evaluate: no predictions given")]
    NoPredictions,

    #[error("label/dataset misalignment at row {index}: expected `{expected}`, found `{found}`")]
    LabelAlignment {
        index: usize,
        expected: String,
        found: String,
    },

    #[error("stale input: {} no longer matches the hash recorded in its manifest", path.display())]
    StaleInput { path: PathBuf },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnknownFormat { .. }
            | Error::InvalidSpec { .. } => ErrorCategory::Parse,
            Error::DuplicateCommitId { .. }
            | Error::DuplicateIssueId { .. }
            | Error::DuplicateHeuristic { .. }
            | Error::DanglingIssueRef { .. }
            | Error::UnknownHeuristic { .. }
            | Error::EmptyTaskSelection { .. }
            | Error::InvalidTask { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyMatrix
            | Error::AllAbstainMatrix
            | Error::GoldIdMissing { .. }
            | Error::EmptyGold
            | Error::NoPredictions
            | Error::LabelAlignment { .. }
            | Error::StaleInput { .. } => ErrorCategory::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

fn fmt_name(name: &Option<String>) -> String {
    match name {
        Some(n) => format!(" (heuristic `{n}`)"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
