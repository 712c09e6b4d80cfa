//! Heuristic diagnostics, evaluation metrics, reference keyword baselines,
//! and the reviewer-facing report.
//!
//! The report is plain markdown so a CI bot can post it verbatim as a pull
//! request comment; a structured twin with the same numbers is available
//! for machine consumption.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::artifact::Dataset;
use crate::error::{Error, Result};
use crate::heuristic::tokenize;
use crate::matrix::{LabelMatrix, Vote};
use crate::model::{fit, predict, FitConfig, LabelModelParams, ProbLabel};

/// A hard class decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Positive,
    Negative,
}

impl ClassLabel {
    pub fn from_vote(vote: Vote) -> Option<ClassLabel> {
        match vote {
            Vote::Positive => Some(ClassLabel::Positive),
            Vote::Negative => Some(ClassLabel::Negative),
            Vote::Abstain => None,
        }
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(ClassLabel::Positive),
            "negative" => Ok(ClassLabel::Negative),
            other => Err(Error::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

/// Gold labels keyed by artifact id.
#[derive(Debug, Clone, Default)]
pub struct GoldLabels {
    by_id: HashMap<String, ClassLabel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GoldRecord {
    artifact_id: String,
    label: ClassLabel,
}

impl GoldLabels {
    pub fn new(pairs: impl IntoIterator<Item = (String, ClassLabel)>) -> GoldLabels {
        GoldLabels {
            by_id: pairs.into_iter().collect(),
        }
    }

    /// Load line-delimited `{artifact_id, label}` records with labels in
    /// {positive, negative}.
    pub fn load(path: &Path) -> Result<GoldLabels> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut by_id = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let record: GoldRecord = serde_json::from_str(raw)
                .map_err(|e| Error::parse(path, Some(line), e.to_string()))?;
            if by_id.insert(record.artifact_id.clone(), record.label).is_some() {
                return Err(Error::parse(
                    path,
                    Some(line),
                    format!("duplicate gold label for `{}`", record.artifact_id),
                ));
            }
        }
        Ok(GoldLabels { by_id })
    }

    pub fn get(&self, id: &str) -> Option<ClassLabel> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

/// Per-heuristic quality signals computed from the matrix (and optionally
/// gold labels). For every column: conflict <= overlap <= coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicDiagnostics {
    pub name: String,
    /// Fraction of rows with a non-abstain vote.
    pub coverage: f64,
    /// Fraction of rows where this heuristic votes and at least one other
    /// heuristic also votes.
    pub overlap: f64,
    /// Fraction of rows where this heuristic votes and at least one other
    /// heuristic votes the opposite sign.
    pub conflict: f64,
    pub positive_votes: usize,
    pub negative_votes: usize,
    /// Fraction of this heuristic's votes that agree with gold; present
    /// only when gold labels were supplied and the column voted at least once.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_accuracy: Option<f64>,
}

/// Compute coverage/overlap/conflict (and, with gold, empirical accuracy)
/// for every column. Gold, when given, must cover every row id.
pub fn diagnostics(
    matrix: &LabelMatrix,
    gold: Option<&GoldLabels>,
) -> Result<Vec<HeuristicDiagnostics>> {
    if let Some(gold) = gold {
        for id in matrix.row_ids() {
            if gold.get(id).is_none() {
                return Err(Error::GoldIdMissing { id: id.clone() });
            }
        }
    }
    let n = matrix.n_rows();
    let m = matrix.n_cols();
    let mut covered = vec![0usize; m];
    let mut overlapping = vec![0usize; m];
    let mut conflicting = vec![0usize; m];
    let mut pos_votes = vec![0usize; m];
    let mut neg_votes = vec![0usize; m];
    let mut gold_agree = vec![0usize; m];

    for (i, row) in matrix.rows().enumerate() {
        let voters = row.iter().filter(|v| !v.is_abstain()).count();
        let positives = row.iter().filter(|v| **v == Vote::Positive).count();
        let negatives = voters - positives;
        let gold_label = gold.map(|g| g.get(&matrix.row_ids()[i]).expect("checked above"));
        for (j, vote) in row.iter().enumerate() {
            match vote {
                Vote::Abstain => continue,
                Vote::Positive => pos_votes[j] += 1,
                Vote::Negative => neg_votes[j] += 1,
            }
            covered[j] += 1;
            if voters > 1 {
                overlapping[j] += 1;
            }
            let opposite = match vote {
                Vote::Positive => negatives,
                Vote::Negative => positives,
                Vote::Abstain => unreachable!(),
            };
            if opposite > 0 {
                conflicting[j] += 1;
            }
            if let Some(label) = gold_label {
                if ClassLabel::from_vote(*vote) == Some(label) {
                    gold_agree[j] += 1;
                }
            }
        }
    }

    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    Ok((0..m)
        .map(|j| HeuristicDiagnostics {
            name: matrix.column_names()[j].clone(),
            coverage: frac(covered[j]),
            overlap: frac(overlapping[j]),
            conflict: frac(conflicting[j]),
            positive_votes: pos_votes[j],
            negative_votes: neg_votes[j],
            empirical_accuracy: match (gold, covered[j]) {
                (Some(_), c) if c > 0 => Some(gold_agree[j] as f64 / c as f64),
                _ => None,
            },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

/// Standard binary classification metrics. Macro F1 is the unweighted mean
/// of the two per-class F1 scores. A per-class F1 whose class has neither
/// predictions nor gold members is 1.0; with only one side empty it is 0.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub precision_positive: f64,
    pub recall_positive: f64,
    pub f1_positive: f64,
    pub precision_negative: f64,
    pub recall_negative: f64,
    pub f1_negative: f64,
    /// Fraction of rows decided by the fallback class rather than the labeler.
    pub abstain_rate: f64,
    pub confusion: ConfusionCounts,
    pub n: usize,
}

struct Decision {
    id: String,
    label: ClassLabel,
    fell_back: bool,
}

fn score(decisions: Vec<Decision>, gold: &GoldLabels) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    if decisions.is_empty() {
        return Err(Error::NoPredictions);
    }
    let mut confusion = ConfusionCounts {
        true_positive: 0,
        false_positive: 0,
        true_negative: 0,
        false_negative: 0,
    };
    let mut fallbacks = 0usize;
    for decision in &decisions {
        let truth = gold
            .get(&decision.id)
            .ok_or_else(|| Error::GoldIdMissing {
                id: decision.id.clone(),
            })?;
        if decision.fell_back {
            fallbacks += 1;
        }
        match (decision.label, truth) {
            (ClassLabel::Positive, ClassLabel::Positive) => confusion.true_positive += 1,
            (ClassLabel::Positive, ClassLabel::Negative) => confusion.false_positive += 1,
            (ClassLabel::Negative, ClassLabel::Negative) => confusion.true_negative += 1,
            (ClassLabel::Negative, ClassLabel::Positive) => confusion.false_negative += 1,
        }
    }
    let n = decisions.len();
    let accuracy = (confusion.true_positive + confusion.true_negative) as f64 / n as f64;

    let (precision_positive, recall_positive, f1_positive) = class_metrics(
        confusion.true_positive,
        confusion.false_positive,
        confusion.false_negative,
    );
    let (precision_negative, recall_negative, f1_negative) = class_metrics(
        confusion.true_negative,
        confusion.false_negative,
        confusion.false_positive,
    );

    Ok(EvalReport {
        accuracy,
        macro_f1: (f1_positive + f1_negative) / 2.0,
        precision_positive,
        recall_positive,
        f1_positive,
        precision_negative,
        recall_negative,
        f1_negative,
        abstain_rate: fallbacks as f64 / n as f64,
        confusion,
        n,
    })
}

/// Precision, recall, and F1 for one class given its true-positive count,
/// the count of wrong predictions INTO the class, and the count of its gold
/// members predicted OUT of it.
fn class_metrics(tp: usize, into: usize, out: usize) -> (f64, f64, f64) {
    let predicted = tp + into;
    let actual = tp + out;
    let precision = if predicted == 0 {
        if actual == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / predicted as f64
    };
    let recall = if actual == 0 {
        if predicted == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / actual as f64
    };
    let f1 = if predicted == 0 && actual == 0 {
        1.0
    } else if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Evaluate probabilistic labels: threshold at 0.5, with abstained rows and
/// exact ties resolved by the fallback class.
pub fn evaluate_prob_labels(
    labels: &[ProbLabel],
    gold: &GoldLabels,
    fallback: ClassLabel,
) -> Result<EvalReport> {
    let decisions = labels
        .iter()
        .map(|label| {
            let (class, fell_back) = decide(label, fallback);
            Decision {
                id: label.artifact_id.clone(),
                label: class,
                fell_back,
            }
        })
        .collect();
    score(decisions, gold)
}

/// Threshold one probabilistic label, returning the hard class and whether
/// the fallback rule decided it.
pub fn decide(label: &ProbLabel, fallback: ClassLabel) -> (ClassLabel, bool) {
    if label.abstained {
        (fallback, true)
    } else if label.p_positive > 0.5 {
        (ClassLabel::Positive, false)
    } else if label.p_positive < 0.5 {
        (ClassLabel::Negative, false)
    } else {
        (fallback, true)
    }
}

/// Evaluate hard votes (e.g. the majority-vote baseline); abstains resolve
/// to the fallback class.
pub fn evaluate_votes(
    ids: &[String],
    votes: &[Vote],
    gold: &GoldLabels,
    fallback: ClassLabel,
) -> Result<EvalReport> {
    if ids.len() != votes.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            actual: votes.len(),
        });
    }
    let decisions = ids
        .iter()
        .zip(votes)
        .map(|(id, vote)| match ClassLabel::from_vote(*vote) {
            Some(label) => Decision {
                id: id.clone(),
                label,
                fell_back: false,
            },
            None => Decision {
                id: id.clone(),
                label: fallback,
                fell_back: true,
            },
        })
        .collect();
    score(decisions, gold)
}

/// Evaluate hard class decisions that never abstain (keyword baselines).
pub fn evaluate_class_labels(
    predictions: &[(String, ClassLabel)],
    gold: &GoldLabels,
) -> Result<EvalReport> {
    let decisions = predictions
        .iter()
        .map(|(id, label)| Decision {
            id: id.clone(),
            label: *label,
            fell_back: false,
        })
        .collect();
    score(decisions, gold)
}

/// Reference keyword baselines from the literature: a wide 17-keyword list
/// and a narrow high-precision 6-keyword list. A message matching any
/// keyword is positive; everything else is negative — the baseline never
/// abstains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    GitCProc,
    Tufano,
}

impl BaselineKind {
    pub fn file_name(self) -> &'static str {
        match self {
            BaselineKind::GitCProc => "gitcproc.txt",
            BaselineKind::Tufano => "tufano.txt",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gitcproc" => Ok(BaselineKind::GitCProc),
            "tufano" => Ok(BaselineKind::Tufano),
            other => Err(Error::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Baseline {
    pub name: String,
    pub keywords: Vec<String>,
}

impl Baseline {
    /// Load a baseline keyword file (one keyword per line, `#` comments).
    pub fn load(kind: BaselineKind, dir: &Path) -> Result<Baseline> {
        let path = dir.join(kind.file_name());
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let keywords: Vec<String> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        if keywords.is_empty() {
            return Err(Error::parse(&path, None, "keyword file has no keywords"));
        }
        Ok(Baseline {
            name: kind.file_name().trim_end_matches(".txt").to_string(),
            keywords,
        })
    }

    /// Token-match the commit message: any keyword hit is positive, no hit
    /// is negative.
    pub fn classify(&self, dataset: &Dataset) -> Vec<(String, ClassLabel)> {
        dataset
            .commits
            .iter()
            .map(|commit| {
                let tokens: HashSet<String> = tokenize(&commit.message).into_iter().collect();
                let hit = self.keywords.iter().any(|k| tokens.contains(k));
                let label = if hit {
                    ClassLabel::Positive
                } else {
                    ClassLabel::Negative
                };
                (commit.id.clone(), label)
            })
            .collect()
    }
}

/// Memo for label-model fits keyed by (matrix content, fit config); the
/// leave-one-out loop hits the same base matrix repeatedly.
#[derive(Debug, Default)]
pub struct FitCache {
    cache: HashMap<String, LabelModelParams>,
}

impl FitCache {
    pub fn new() -> FitCache {
        FitCache::default()
    }

    pub fn get_or_fit(
        &mut self,
        matrix: &LabelMatrix,
        config: &FitConfig,
    ) -> Result<LabelModelParams> {
        let key = format!(
            "{}|{}",
            matrix.content_hash(),
            serde_json::to_string(config).expect("config serializes")
        );
        if let Some(params) = self.cache.get(&key) {
            return Ok(params.clone());
        }
        let outcome = fit(matrix, config)?;
        self.cache.insert(key, outcome.params.clone());
        Ok(outcome.params)
    }
}

/// Label-model accuracy delta attributable to one heuristic: accuracy with
/// the full matrix minus accuracy with that column removed (refit without
/// it). Positive means the heuristic helps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub name: String,
    pub delta_accuracy: f64,
}

pub fn loo_contributions(
    matrix: &LabelMatrix,
    names: &[String],
    gold: &GoldLabels,
    config: &FitConfig,
    fallback: ClassLabel,
    cache: &mut FitCache,
) -> Result<Vec<Contribution>> {
    let full_accuracy = model_accuracy(matrix, gold, config, fallback, cache)?;
    let mut contributions = Vec::with_capacity(names.len());
    for name in names {
        let col = matrix
            .column_index(name)
            .ok_or_else(|| Error::UnknownHeuristic { name: name.clone() })?;
        let reduced = matrix.without_column(col);
        let reduced_accuracy = match model_accuracy(&reduced, gold, config, fallback, cache) {
            Ok(acc) => acc,
            // Removing the last informative column leaves nothing to fit;
            // the comparison point is then the all-fallback labeler.
            Err(Error::EmptyMatrix) | Err(Error::AllAbstainMatrix) => {
                fallback_accuracy(matrix.row_ids(), gold, fallback)?
            }
            Err(other) => return Err(other),
        };
        contributions.push(Contribution {
            name: name.clone(),
            delta_accuracy: full_accuracy - reduced_accuracy,
        });
    }
    Ok(contributions)
}

fn model_accuracy(
    matrix: &LabelMatrix,
    gold: &GoldLabels,
    config: &FitConfig,
    fallback: ClassLabel,
    cache: &mut FitCache,
) -> Result<f64> {
    let params = cache.get_or_fit(matrix, config)?;
    let labels = predict(&params, matrix)?;
    Ok(evaluate_prob_labels(&labels, gold, fallback)?.accuracy)
}

fn fallback_accuracy(ids: &[String], gold: &GoldLabels, fallback: ClassLabel) -> Result<f64> {
    let predictions: Vec<(String, ClassLabel)> =
        ids.iter().map(|id| (id.clone(), fallback)).collect();
    Ok(evaluate_class_labels(&predictions, gold)?.accuracy)
}

/// Everything the rendered report shows, in machine-readable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub diagnostics: Vec<HeuristicDiagnostics>,
    pub head: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<MetricDeltas>,
    pub contributions: Vec<Contribution>,
}

/// Head-minus-base metric differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub precision_positive: f64,
    pub recall_positive: f64,
    pub precision_negative: f64,
    pub recall_negative: f64,
    pub abstain_rate: f64,
}

impl MetricDeltas {
    pub fn between(head: &EvalReport, base: &EvalReport) -> MetricDeltas {
        MetricDeltas {
            accuracy: head.accuracy - base.accuracy,
            macro_f1: head.macro_f1 - base.macro_f1,
            precision_positive: head.precision_positive - base.precision_positive,
            recall_positive: head.recall_positive - base.recall_positive,
            precision_negative: head.precision_negative - base.precision_negative,
            recall_negative: head.recall_negative - base.recall_negative,
            abstain_rate: head.abstain_rate - base.abstain_rate,
        }
    }
}

impl ReportData {
    pub fn new(
        diagnostics: Vec<HeuristicDiagnostics>,
        head: EvalReport,
        base: Option<EvalReport>,
        contributions: Vec<Contribution>,
    ) -> ReportData {
        let deltas = base.as_ref().map(|b| MetricDeltas::between(&head, b));
        ReportData {
            diagnostics,
            head,
            base,
            deltas,
            contributions,
        }
    }
}

fn fmt_delta(d: f64) -> String {
    if d == 0.0 {
        "0.000".to_string()
    } else {
        format!("{d:+.3}")
    }
}

/// Render the report as markdown, ready to be posted as a PR comment.
pub fn render_report(data: &ReportData) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    writeln!(out, "# Label model report").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "## Heuristic diagnostics").unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "| heuristic | coverage | overlap | conflict | +votes | -votes | accuracy |"
    )
    .unwrap();
    writeln!(out, "|---|---|---|---|---|---|---|").unwrap();
    for d in &data.diagnostics {
        let accuracy = d
            .empirical_accuracy
            .map(|a| format!("{a:.3}"))
            .unwrap_or_else(|| "-".to_string());
        writeln!(
            out,
            "| {} | {:.3} | {:.3} | {:.3} | {} | {} | {} |",
            d.name, d.coverage, d.overlap, d.conflict, d.positive_votes, d.negative_votes, accuracy
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "## Test-set metrics").unwrap();
    writeln!(out).unwrap();
    match (&data.base, &data.deltas) {
        (Some(base), Some(deltas)) => {
            writeln!(out, "| metric | base | head | delta |").unwrap();
            writeln!(out, "|---|---|---|---|").unwrap();
            let rows: [(&str, f64, f64, f64); 7] = [
                ("accuracy", base.accuracy, data.head.accuracy, deltas.accuracy),
                ("macro F1", base.macro_f1, data.head.macro_f1, deltas.macro_f1),
                (
                    "precision (positive)",
                    base.precision_positive,
                    data.head.precision_positive,
                    deltas.precision_positive,
                ),
                (
                    "recall (positive)",
                    base.recall_positive,
                    data.head.recall_positive,
                    deltas.recall_positive,
                ),
                (
                    "precision (negative)",
                    base.precision_negative,
                    data.head.precision_negative,
                    deltas.precision_negative,
                ),
                (
                    "recall (negative)",
                    base.recall_negative,
                    data.head.recall_negative,
                    deltas.recall_negative,
                ),
                (
                    "abstain rate",
                    base.abstain_rate,
                    data.head.abstain_rate,
                    deltas.abstain_rate,
                ),
            ];
            for (name, b, h, d) in rows {
                writeln!(out, "| {name} | {b:.3} | {h:.3} | {} |", fmt_delta(d)).unwrap();
            }
        }
        _ => {
            writeln!(out, "| metric | head |").unwrap();
            writeln!(out, "|---|---|").unwrap();
            let rows: [(&str, f64); 7] = [
                ("accuracy", data.head.accuracy),
                ("macro F1", data.head.macro_f1),
                ("precision (positive)", data.head.precision_positive),
                ("recall (positive)", data.head.recall_positive),
                ("precision (negative)", data.head.precision_negative),
                ("recall (negative)", data.head.recall_negative),
                ("abstain rate", data.head.abstain_rate),
            ];
            for (name, h) in rows {
                writeln!(out, "| {name} | {h:.3} |").unwrap();
            }
        }
    }
    if !data.contributions.is_empty() {
        writeln!(out).unwrap();
        writeln!(out, "## New heuristic contributions (leave-one-out)").unwrap();
        writeln!(out).unwrap();
        writeln!(out, "| heuristic | accuracy delta |").unwrap();
        writeln!(out, "|---|---|").unwrap();
        for c in &data.contributions {
            writeln!(out, "| {} | {} |", c.name, fmt_delta(c.delta_accuracy)).unwrap();
        }
    }
    out
}
