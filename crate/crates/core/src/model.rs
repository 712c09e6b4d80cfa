//! The generative label model: combines noisy ternary votes into
//! probabilistic labels by estimating, without any ground truth, how
//! accurate each heuristic is.
//!
//! Model: a latent binary label `y` is drawn positive with probability `p`
//! (the class balance). Conditioned on `y`, heuristic `j` abstains with
//! probability `1 - beta_j` independently of `y`, and otherwise votes `y`
//! with probability `alpha_j` (its accuracy). Heuristics are conditionally
//! independent given `y`, so abstentions cancel out of the posterior and
//! the log-odds of a row are
//!
//! ```text
//! log(p / (1-p)) + sum over non-abstain j of vote_j * log(alpha_j / (1-alpha_j))
//! ```
//!
//! Fitting is plain expectation-maximization. The E-step computes each
//! row's posterior under the current parameters; the M-step re-estimates
//! every accuracy as the expected fraction of its votes that agree with the
//! latent label, sets each propensity to observed column coverage, and (if
//! not frozen) sets the class balance to the mean posterior. The global
//! label-swap degeneracy is broken twice: accuracies are initialized from
//! agreement with the majority vote, and a fitted model whose mean accuracy
//! lands below one half is flipped. Everything is sequential and
//! deterministic, so a fit is bit-reproducible from (matrix, config).

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{LabelMatrix, Vote};

/// Accuracies and the class balance are clamped into this range so that
/// log-odds stay finite.
pub const ACCURACY_CLAMP: (f64, f64) = (0.01, 0.99);

fn clamp(x: f64) -> f64 {
    x.clamp(ACCURACY_CLAMP.0, ACCURACY_CLAMP.1)
}

/// Parameters of the generative model: per-heuristic accuracy and
/// propensity plus the positive-class prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    /// P(vote equals the true label | the heuristic voted), per heuristic.
    pub accuracies: Vec<f64>,
    /// P(the heuristic votes at all), per heuristic.
    pub propensities: Vec<f64>,
    /// Prior probability of the positive class.
    pub class_balance: f64,
}

impl LabelModelParams {
    pub fn new(accuracies: Vec<f64>, propensities: Vec<f64>, class_balance: f64) -> Self {
        LabelModelParams {
            accuracies,
            propensities,
            class_balance,
        }
    }

    pub fn n_heuristics(&self) -> usize {
        self.accuracies.len()
    }
}

/// A probabilistic label for one artifact. `abstained` is true exactly when
/// no heuristic voted on the row, in which case the probability falls back
/// to the class balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbLabel {
    pub artifact_id: String,
    pub p_positive: f64,
    pub abstained: bool,
}

/// Baseline aggregation: the sign of the row's vote sum, with ties (and
/// all-abstain rows) mapping to abstain.
pub fn majority_vote(matrix: &LabelMatrix) -> Vec<Vote> {
    matrix
        .rows()
        .map(|row| {
            let sum: i64 = row.iter().map(|v| v.as_i8() as i64).sum();
            match sum.cmp(&0) {
                std::cmp::Ordering::Greater => Vote::Positive,
                std::cmp::Ordering::Less => Vote::Negative,
                std::cmp::Ordering::Equal => Vote::Abstain,
            }
        })
        .collect()
}

/// Posterior probability that a row's true label is positive.
///
/// All-abstain rows short-circuit to the class balance so the equality
/// `abstained => p_positive == class_balance` holds exactly.
pub fn posterior(params: &LabelModelParams, row: &[Vote]) -> Result<f64> {
    if row.len() != params.accuracies.len() {
        return Err(Error::DimensionMismatch {
            expected: params.accuracies.len(),
            actual: row.len(),
        });
    }
    if row.iter().all(|v| v.is_abstain()) {
        return Ok(clamp(params.class_balance));
    }
    let p = clamp(params.class_balance);
    let mut log_pos = p.ln();
    let mut log_neg = (1.0 - p).ln();
    for (vote, &alpha) in row.iter().zip(&params.accuracies) {
        let a = clamp(alpha);
        match vote {
            Vote::Positive => {
                log_pos += a.ln();
                log_neg += (1.0 - a).ln();
            }
            Vote::Negative => {
                log_pos += (1.0 - a).ln();
                log_neg += a.ln();
            }
            Vote::Abstain => {}
        }
    }
    let m = log_pos.max(log_neg);
    let pos = (log_pos - m).exp();
    let neg = (log_neg - m).exp();
    Ok(pos / (pos + neg))
}

/// Fit configuration. Convergence is max absolute parameter change below
/// `tol`; running out of iterations is a warning, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Freeze the class balance instead of fitting it.
    pub class_balance: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol: 1e-6,
            max_iter: 1000,
            class_balance: None,
        }
    }
}

/// A fitted model plus fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: LabelModelParams,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// Estimate model parameters from the vote matrix alone.
///
/// Columns that never vote are excluded from fitting and pinned at
/// accuracy 0.5 / propensity 0. A matrix without a single vote anywhere
/// cannot be fit and is an error.
pub fn fit(matrix: &LabelMatrix, config: &FitConfig) -> Result<FitOutcome> {
    let n = matrix.n_rows();
    let m = matrix.n_cols();
    if m == 0 {
        return Err(Error::EmptyMatrix);
    }
    let coverage_counts: Vec<usize> = (0..m)
        .map(|j| matrix.column(j).filter(|v| !v.is_abstain()).count())
        .collect();
    if coverage_counts.iter().all(|&c| c == 0) {
        return Err(Error::AllAbstainMatrix);
    }
    let propensities: Vec<f64> = coverage_counts
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();

    // Initialize accuracies from agreement with the majority vote, floored
    // at 0.55 to break the label-swap symmetry toward the majority
    // orientation.
    let mv = majority_vote(matrix);
    let mut accuracies: Vec<f64> = (0..m)
        .map(|j| {
            if coverage_counts[j] == 0 {
                return 0.5;
            }
            let mut agree = 0usize;
            let mut total = 0usize;
            for (row, &mv_vote) in (0..n).zip(&mv) {
                let v = matrix.cell(row, j);
                if v.is_abstain() || mv_vote.is_abstain() {
                    continue;
                }
                total += 1;
                if v == mv_vote {
                    agree += 1;
                }
            }
            let rate = if total == 0 {
                0.55
            } else {
                agree as f64 / total as f64
            };
            clamp(rate.max(0.55))
        })
        .collect();

    let frozen = config.class_balance.is_some();
    let mut class_balance = clamp(config.class_balance.unwrap_or(0.5));

    let mut posteriors = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let params = LabelModelParams::new(accuracies.clone(), propensities.clone(), class_balance);
        for (i, q) in posteriors.iter_mut().enumerate() {
            *q = posterior(&params, matrix.row(i)).expect("dimensions match");
        }

        let mut delta: f64 = 0.0;
        for j in 0..m {
            if coverage_counts[j] == 0 {
                continue;
            }
            let mut agree = 0.0f64;
            for (i, q) in posteriors.iter().enumerate() {
                match matrix.cell(i, j) {
                    Vote::Positive => agree += q,
                    Vote::Negative => agree += 1.0 - q,
                    Vote::Abstain => {}
                }
            }
            let next = clamp(agree / coverage_counts[j] as f64);
            delta = delta.max((next - accuracies[j]).abs());
            accuracies[j] = next;
        }
        if !frozen {
            let mean_q = posteriors.iter().sum::<f64>() / n as f64;
            let next = clamp(mean_q);
            delta = delta.max((next - class_balance).abs());
            class_balance = next;
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    // Global flip degeneracy: orient the model so heuristics are on average
    // better than chance.
    let covered: Vec<usize> = (0..m).filter(|&j| coverage_counts[j] > 0).collect();
    let mean_alpha =
        covered.iter().map(|&j| accuracies[j]).sum::<f64>() / covered.len() as f64;
    if mean_alpha < 0.5 {
        for a in accuracies.iter_mut() {
            *a = 1.0 - *a;
        }
        class_balance = 1.0 - class_balance;
    }

    let params = LabelModelParams::new(accuracies, propensities, class_balance);
    let log_likelihood = log_likelihood(matrix, &params, &coverage_counts);
    Ok(FitOutcome {
        params,
        iterations,
        converged,
        log_likelihood,
    })
}

/// Full-data log-likelihood of the fitted model (vote placement and vote
/// values), used for fit logging.
fn log_likelihood(matrix: &LabelMatrix, params: &LabelModelParams, coverage: &[usize]) -> f64 {
    let n = matrix.n_rows();
    let p = clamp(params.class_balance);
    let mut ll = 0.0;
    for (j, &c) in coverage.iter().enumerate() {
        let beta = params.propensities[j];
        if beta > 0.0 {
            ll += c as f64 * beta.ln();
        }
        if beta < 1.0 {
            ll += (n - c) as f64 * (1.0 - beta).ln();
        }
    }
    for i in 0..n {
        let mut log_pos = p.ln();
        let mut log_neg = (1.0 - p).ln();
        for (vote, &alpha) in matrix.row(i).iter().zip(&params.accuracies) {
            let a = clamp(alpha);
            match vote {
                Vote::Positive => {
                    log_pos += a.ln();
                    log_neg += (1.0 - a).ln();
                }
                Vote::Negative => {
                    log_pos += (1.0 - a).ln();
                    log_neg += a.ln();
                }
                Vote::Abstain => {}
            }
        }
        let mx = log_pos.max(log_neg);
        ll += mx + ((log_pos - mx).exp() + (log_neg - mx).exp()).ln();
    }
    ll
}

/// One probabilistic label per matrix row.
pub fn predict(params: &LabelModelParams, matrix: &LabelMatrix) -> Result<Vec<ProbLabel>> {
    if matrix.n_cols() != params.accuracies.len() {
        return Err(Error::DimensionMismatch {
            expected: params.accuracies.len(),
            actual: matrix.n_cols(),
        });
    }
    matrix
        .rows()
        .zip(matrix.row_ids())
        .map(|(row, id)| {
            let abstained = row.iter().all(|v| v.is_abstain());
            let p_positive = posterior(params, row)?;
            Ok(ProbLabel {
                artifact_id: id.clone(),
                p_positive,
                abstained,
            })
        })
        .collect()
}

/// Fraction of rows where the model abstained.
pub fn abstain_rate(labels: &[ProbLabel]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|l| l.abstained).count() as f64 / labels.len() as f64
}

/// Draw a synthetic matrix (and its true labels) from planted parameters.
/// Fully determined by the seed; columns are named `h0..h{m-1}` and rows
/// `s0..s{n-1}`.
pub fn sample_synthetic(
    planted: &LabelModelParams,
    n: usize,
    seed: u64,
) -> (LabelMatrix, Vec<Vote>) {
    let m = planted.n_heuristics();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n * m);
    for _ in 0..n {
        let truth = if rng.gen_bool(planted.class_balance) {
            Vote::Positive
        } else {
            Vote::Negative
        };
        labels.push(truth);
        for j in 0..m {
            let cell = if rng.gen_bool(planted.propensities[j]) {
                if rng.gen_bool(planted.accuracies[j]) {
                    truth
                } else {
                    truth.flipped()
                }
            } else {
                Vote::Abstain
            };
            cells.push(cell);
        }
    }
    let row_ids = (0..n).map(|i| format!("s{i}")).collect();
    let column_names = (0..m).map(|j| format!("h{j}")).collect();
    let matrix = LabelMatrix::new(row_ids, column_names, cells).expect("sized by construction");
    (matrix, labels)
}

/// On-disk form of a fitted model: heuristic names in matrix order, the
/// parameter vectors, the fit config echo, and the hash of the matrix the
/// model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub heuristics: Vec<String>,
    pub accuracies: Vec<f64>,
    pub propensities: Vec<f64>,
    pub class_balance: f64,
    pub config: FitConfig,
    pub matrix_hash: String,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

impl FittedModel {
    pub fn from_outcome(outcome: &FitOutcome, matrix: &LabelMatrix, config: &FitConfig) -> Self {
        FittedModel {
            heuristics: matrix.column_names().to_vec(),
            accuracies: outcome.params.accuracies.clone(),
            propensities: outcome.params.propensities.clone(),
            class_balance: outcome.params.class_balance,
            config: config.clone(),
            matrix_hash: matrix.content_hash(),
            iterations: outcome.iterations,
            converged: outcome.converged,
            log_likelihood: outcome.log_likelihood,
        }
    }

    pub fn params(&self) -> LabelModelParams {
        LabelModelParams::new(
            self.accuracies.clone(),
            self.propensities.clone(),
            self.class_balance,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<FittedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, None, e.to_string()))
    }
}

/// Write probabilistic labels as line-delimited JSON records.
pub fn write_prob_labels(path: &Path, labels: &[ProbLabel]) -> Result<()> {
    let mut out = String::new();
    for label in labels {
        out.push_str(&serde_json::to_string(label).expect("label serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_prob_labels(path: &Path) -> Result<Vec<ProbLabel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let label: ProbLabel = serde_json::from_str(raw)
            .map_err(|e| Error::parse(path, Some(idx + 1), e.to_string()))?;
        labels.push(label);
    }
    Ok(labels)
}
