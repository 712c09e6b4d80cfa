//! End-to-end library pipeline checks that cut across modules.

use std::collections::BTreeMap;

use replabel_core::analysis::{evaluate_prob_labels, ClassLabel, GoldLabels};
use replabel_core::artifact::{CommitArtifact, Dataset, IssueArtifact};
use replabel_core::heuristic::{apply_all, Registry};
use replabel_core::matrix::Vote;
use replabel_core::model::{
    fit, majority_vote, predict, sample_synthetic, FitConfig, LabelModelParams,
};
use replabel_core::task::{resolve_task, TaskDefinition};

fn commit(id: &str, message: &str, issue_ids: Vec<String>) -> CommitArtifact {
    CommitArtifact {
        id: id.into(),
        message: message.into(),
        author: None,
        timestamp: None,
        files: vec![],
        issue_ids,
        extra: serde_json::Map::new(),
    }
}

fn bug_issue(id: &str) -> IssueArtifact {
    IssueArtifact {
        id: id.into(),
        title: "crash on startup".into(),
        body: "stack trace attached".into(),
        labels: vec!["bug".into()],
        extra: serde_json::Map::new(),
    }
}

fn small_dataset() -> Dataset {
    let mut issues = BTreeMap::new();
    issues.insert("I-1".to_string(), bug_issue("I-1"));
    issues.insert("I-2".to_string(), bug_issue("I-2"));
    issues.insert("I-3".to_string(), bug_issue("I-3"));
    Dataset::from_parts(
        "mini",
        vec![
            commit("c1", "fix crash in parser", vec!["I-1".into()]),
            commit("c2", "add dark mode", vec![]),
            commit("c3", "fix typo in docs", vec![]),
            commit("c4", "rework test harness for docs build", vec![]),
            commit("c5", "fix flaky crash on resume", vec!["I-2".into()]),
            commit("c6", "polish docs in test directory", vec![]),
            commit("c7", "crash fix for empty buffer", vec!["I-3".into()]),
            commit("c8", "add test coverage for docs examples", vec![]),
        ],
        issues,
    )
}

const SPEC_KEYWORDS: &str = concat!(
    "- name: kw_fix\n",
    "  kind: keyword\n",
    "  polarity: positive\n",
    "  field: message\n",
    "  keywords: [fix, crash]\n",
    "- name: kw_docs\n",
    "  kind: keyword\n",
    "  polarity: negative\n",
    "  field: message\n",
    "  keywords: [docs, typo]\n",
    "- name: iz_bug\n",
    "  kind: keyword\n",
    "  polarity: positive\n",
    "  field: issue_labels\n",
    "  keywords: [bug]\n",
);

const SPEC_TESTS: &str = concat!(
    "name: test_file_fix\n",
    "kind: keyword\n",
    "polarity: negative\n",
    "field: message\n",
    "keywords: [test]\n",
);

/// Excluding a heuristic from a task must be observationally equivalent to
/// deleting its spec file, across the whole pipeline output.
#[test]
fn task_exclusion_equals_spec_file_deletion() {
    let dataset = small_dataset();

    let full_dir = tempfile::tempdir().unwrap();
    std::fs::write(full_dir.path().join("10_keywords.yaml"), SPEC_KEYWORDS).unwrap();
    std::fs::write(full_dir.path().join("20_tests.yaml"), SPEC_TESTS).unwrap();

    let trimmed_dir = tempfile::tempdir().unwrap();
    std::fs::write(trimmed_dir.path().join("10_keywords.yaml"), SPEC_KEYWORDS).unwrap();

    let full = Registry::load_dir(full_dir.path()).unwrap();
    let trimmed = Registry::load_dir(trimmed_dir.path()).unwrap();

    let mut task = TaskDefinition::default_task();
    task.exclude = vec!["test_file_fix".into()];
    let resolved = resolve_task(&task, &full).unwrap();

    let (matrix_excluded, _) = apply_all(&resolved, &dataset);
    let (matrix_deleted, _) = apply_all(&trimmed, &dataset);
    assert_eq!(matrix_excluded, matrix_deleted);
    assert_eq!(
        matrix_excluded.content_hash(),
        matrix_deleted.content_hash()
    );

    let config = FitConfig::default();
    let fit_excluded = fit(&matrix_excluded, &config).unwrap();
    let fit_deleted = fit(&matrix_deleted, &config).unwrap();
    assert_eq!(fit_excluded.params, fit_deleted.params);

    let labels_excluded = predict(&fit_excluded.params, &matrix_excluded).unwrap();
    let labels_deleted = predict(&fit_deleted.params, &matrix_deleted).unwrap();
    assert_eq!(labels_excluded, labels_deleted);
}

/// Fitting recovers planted parameters well enough to beat majority vote
/// when heuristic quality is heterogeneous (small smoke-test scale).
#[test]
fn fitted_model_tracks_planted_parameters() {
    let m = 8;
    let accuracies: Vec<f64> = (0..m).map(|j| 0.55 + 0.35 * j as f64 / (m - 1) as f64).collect();
    let propensities = vec![0.4; m];
    let planted = LabelModelParams::new(accuracies.clone(), propensities, 0.5);
    let (matrix, truth) = sample_synthetic(&planted, 4000, 1234);

    let outcome = fit(&matrix, &FitConfig::default()).unwrap();
    for (j, (&fitted, &wanted)) in outcome
        .params
        .accuracies
        .iter()
        .zip(&accuracies)
        .enumerate()
    {
        assert!(
            (fitted - wanted).abs() < 0.08,
            "column {j}: fitted {fitted}, planted {wanted}"
        );
    }

    let gold = GoldLabels::new(matrix.row_ids().iter().zip(&truth).map(|(id, v)| {
        (
            id.clone(),
            ClassLabel::from_vote(*v).expect("truth labels never abstain"),
        )
    }));
    let labels = predict(&outcome.params, &matrix).unwrap();
    let model_report = evaluate_prob_labels(&labels, &gold, ClassLabel::Negative).unwrap();
    let mv_report = replabel_core::analysis::evaluate_votes(
        matrix.row_ids(),
        &majority_vote(&matrix),
        &gold,
        ClassLabel::Negative,
    )
    .unwrap();
    assert!(
        model_report.accuracy > mv_report.accuracy,
        "model {} vs majority vote {}",
        model_report.accuracy,
        mv_report.accuracy
    );
}

/// The two fixed votes of the toy dataset end-to-end: matrix, model, labels.
#[test]
fn mini_pipeline_labels_are_sane() {
    let dataset = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("10_keywords.yaml"), SPEC_KEYWORDS).unwrap();
    std::fs::write(dir.path().join("20_tests.yaml"), SPEC_TESTS).unwrap();
    let registry = Registry::load_dir(dir.path()).unwrap();

    let (matrix, report) = apply_all(&registry, &dataset);
    assert!(report.is_clean());
    assert_eq!(matrix.n_rows(), 8);
    assert_eq!(matrix.n_cols(), 4);
    assert_eq!(matrix.cell(0, 0), Vote::Positive);

    let outcome = fit(&matrix, &FitConfig::default()).unwrap();
    let labels = predict(&outcome.params, &matrix).unwrap();
    assert_eq!(labels.len(), 8);
    // c2 matches nothing: the model abstains and reports the class balance.
    assert!(labels[1].abstained);
    assert_eq!(labels[1].p_positive, outcome.params.class_balance);
    // c1 hits the positive keyword heuristic and the linked bug issue.
    assert!(!labels[0].abstained);
    assert!(labels[0].p_positive > 0.5);
    // c4 hits only the test keyword.
    assert!(labels[3].p_positive < 0.5);
}
