//! Task definitions: a named re-selection (and optional re-polarization) of
//! registry heuristics, plus the labeled-dataset export path.
//!
//! Tasks are declarative files colocated with heuristic specs, so a task
//! variant — say, one that stops counting test-only fixes as bugs — is a
//! reviewable diff rather than a silently relabeled dataset.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{decide, ClassLabel};
use crate::artifact::Dataset;
use crate::error::{Error, Result};
use crate::heuristic::{Polarity, Registry};
use crate::model::ProbLabel;

/// A binary classification task over the heuristic registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDefinition {
    pub name: String,
    /// Display name of the positive class (e.g. "bug").
    pub positive_label: String,
    /// Display name of the negative class (e.g. "bugless").
    pub negative_label: String,
    /// Heuristic names to select; empty means the whole registry.
    #[serde(default)]
    pub include: Vec<String>,
    /// Heuristic names to remove after selection.
    #[serde(default)]
    pub exclude: Vec<String>,
    /// Per-heuristic polarity remapping, by heuristic name.
    #[serde(default)]
    pub polarity_overrides: BTreeMap<String, Polarity>,
    /// Label assigned when the label model abstains; must equal one of the
    /// two label names. Defaults to the negative label.
    #[serde(default)]
    pub fallback_class: Option<String>,
    /// Freeze the class balance at a known prior instead of fitting it.
    #[serde(default)]
    pub class_balance: Option<f64>,
}

impl TaskDefinition {
    /// The implicit task: whole registry, positive/negative label names,
    /// negative fallback.
    pub fn default_task() -> TaskDefinition {
        TaskDefinition {
            name: "default".into(),
            positive_label: "positive".into(),
            negative_label: "negative".into(),
            include: vec![],
            exclude: vec![],
            polarity_overrides: BTreeMap::new(),
            fallback_class: None,
            class_balance: None,
        }
    }

    pub fn load(path: &Path) -> Result<TaskDefinition> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let task: TaskDefinition = serde_yaml::from_str(&text)
            .map_err(|e| Error::parse(path, None, e.to_string()))?;
        task.validate()?;
        Ok(task)
    }

    fn validate(&self) -> Result<()> {
        if self.positive_label == self.negative_label {
            return Err(Error::InvalidTask {
                task: self.name.clone(),
                message: "positive and negative labels must differ".into(),
            });
        }
        if let Some(fb) = &self.fallback_class {
            if fb != &self.positive_label && fb != &self.negative_label {
                return Err(Error::InvalidTask {
                    task: self.name.clone(),
                    message: format!(
                        "fallback class `{fb}` is neither `{}` nor `{}`",
                        self.positive_label, self.negative_label
                    ),
                });
            }
        }
        if let Some(p) = self.class_balance {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidTask {
                    task: self.name.clone(),
                    message: format!("class balance {p} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }

    /// Fallback as a class, defaulting to negative.
    pub fn fallback(&self) -> ClassLabel {
        match &self.fallback_class {
            Some(fb) if fb == &self.positive_label => ClassLabel::Positive,
            _ => ClassLabel::Negative,
        }
    }

    pub fn label_name(&self, class: ClassLabel) -> &str {
        match class {
            ClassLabel::Positive => &self.positive_label,
            ClassLabel::Negative => &self.negative_label,
        }
    }
}

/// Resolve a task against a registry: apply include/exclude selection and
/// polarity overrides, preserving registry order. Pure function of its
/// inputs; unknown names are errors.
pub fn resolve_task(task: &TaskDefinition, registry: &Registry) -> Result<Registry> {
    for name in self_reference_names(task) {
        if !registry.contains(name) {
            return Err(Error::UnknownHeuristic {
                name: name.to_string(),
            });
        }
    }
    let included: Vec<_> = registry
        .iter()
        .filter(|h| task.include.is_empty() || task.include.iter().any(|n| n == h.name()))
        .filter(|h| !task.exclude.iter().any(|n| n == h.name()))
        .cloned()
        .collect();
    if included.is_empty() {
        return Err(Error::EmptyTaskSelection {
            task: task.name.clone(),
        });
    }
    for name in task.polarity_overrides.keys() {
        if !included.iter().any(|h| h.name() == name) {
            return Err(Error::InvalidTask {
                task: task.name.clone(),
                message: format!("polarity override for `{name}` targets an unselected heuristic"),
            });
        }
    }
    let entries = included
        .into_iter()
        .map(|h| {
            let flip = task
                .polarity_overrides
                .get(h.name())
                .map(|wanted| *wanted != h.polarity())
                .unwrap_or(false);
            h.with_flip(flip)
        })
        .collect();
    Ok(Registry::from_entries_unchecked(entries))
}

fn self_reference_names(task: &TaskDefinition) -> impl Iterator<Item = &str> {
    task.include
        .iter()
        .chain(task.exclude.iter())
        .map(|s| s.as_str())
        .chain(task.polarity_overrides.keys().map(|s| s.as_str()))
}

/// Row selection for dataset export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMode {
    /// Every row, soft label only.
    Soft,
    /// Every row, hard label with threshold + fallback applied.
    Hard,
    /// Only rows the model actually labeled; abstained rows are dropped.
    ModelLabeledOnly,
}

impl std::str::FromStr for ExportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(ExportMode::Soft),
            "hard" => Ok(ExportMode::Hard),
            "model-labeled-only" => Ok(ExportMode::ModelLabeledOnly),
            other => Err(Error::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for ExportMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExportMode::Soft => "soft",
            ExportMode::Hard => "hard",
            ExportMode::ModelLabeledOnly => "model-labeled-only",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Model,
    Fallback,
}

/// One exported training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub artifact_id: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    pub p_positive: f64,
    /// Hard label (task label name); absent in soft mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<LabelSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    /// Rows written.
    pub written: usize,
    /// Abstained rows dropped (model-labeled-only mode).
    pub dropped_abstained: usize,
    /// Rows whose hard label came from the fallback rule.
    pub fallback_labeled: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ExportOptions {
    pub mode: ExportMode,
    /// Also carry author and timestamp into the export.
    pub include_metadata: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            mode: ExportMode::Hard,
            include_metadata: false,
        }
    }
}

/// Stream labeled records for one task. Labels must align with the dataset
/// row-for-row (they come from `predict` over a matrix built from the same
/// dataset).
pub fn export<W: Write>(
    task: &TaskDefinition,
    labels: &[ProbLabel],
    dataset: &Dataset,
    options: ExportOptions,
    writer: &mut W,
) -> Result<ExportSummary> {
    if labels.len() != dataset.commits.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.commits.len(),
            actual: labels.len(),
        });
    }
    for (index, (label, commit)) in labels.iter().zip(&dataset.commits).enumerate() {
        if label.artifact_id != commit.id {
            return Err(Error::LabelAlignment {
                index,
                expected: commit.id.clone(),
                found: label.artifact_id.clone(),
            });
        }
    }

    let fallback = task.fallback();
    let mut summary = ExportSummary {
        written: 0,
        dropped_abstained: 0,
        fallback_labeled: 0,
    };
    for (label, commit) in labels.iter().zip(&dataset.commits) {
        if options.mode == ExportMode::ModelLabeledOnly && label.abstained {
            summary.dropped_abstained += 1;
            continue;
        }
        let (class, fell_back) = decide(label, fallback);
        let record = ExportRecord {
            artifact_id: commit.id.clone(),
            message: commit.message.clone(),
            author: if options.include_metadata {
                commit.author.clone()
            } else {
                None
            },
            timestamp: if options.include_metadata {
                commit.timestamp
            } else {
                None
            },
            p_positive: label.p_positive,
            label: match options.mode {
                ExportMode::Soft => None,
                _ => Some(task.label_name(class).to_string()),
            },
            source: match options.mode {
                ExportMode::Soft => None,
                _ => Some(if fell_back {
                    LabelSource::Fallback
                } else {
                    LabelSource::Model
                }),
            },
        };
        if options.mode != ExportMode::Soft && fell_back {
            summary.fallback_labeled += 1;
        }
        let line = serde_json::to_string(&record).expect("record serializes");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::io("<export>", e))?;
        summary.written += 1;
    }
    Ok(summary)
}
