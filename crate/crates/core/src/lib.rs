//! Programmatic labeling for software-repository artifacts.
//!
//! The pipeline: load commits and issues ([`artifact`]), apply a registry of
//! heuristics to get a ternary vote matrix ([`heuristic`], [`matrix`]),
//! combine the noisy votes into probabilistic labels with an unsupervised
//! generative model ([`model`]), inspect heuristic quality and evaluate
//! against gold labels ([`analysis`]), and export training datasets scoped
//! to a task definition ([`task`]). Run provenance lives in [`manifest`].

pub mod analysis;
pub mod artifact;
pub mod error;
pub mod heuristic;
pub mod manifest;
pub mod matrix;
pub mod model;
pub mod task;

pub use analysis::{
    diagnostics, evaluate_class_labels, evaluate_prob_labels, evaluate_votes, render_report,
    Baseline, BaselineKind, ClassLabel, EvalReport, GoldLabels, HeuristicDiagnostics, ReportData,
};
pub use artifact::{
    link, load_commits, load_issues, validate, CommitArtifact, Dataset, DatasetFormat,
    FileChange, IssueArtifact, LinkPolicy, ValidationReport,
};
pub use error::{Error, ErrorCategory, Result};
pub use heuristic::{apply_all, tokenize, ApplyReport, ArtifactKind, Heuristic, Polarity, Registry};
pub use matrix::{LabelMatrix, Vote};
pub use model::{
    fit, majority_vote, posterior, predict, sample_synthetic, FitConfig, FitOutcome, FittedModel,
    LabelModelParams, ProbLabel,
};
pub use task::{export, resolve_task, ExportMode, ExportOptions, TaskDefinition};
