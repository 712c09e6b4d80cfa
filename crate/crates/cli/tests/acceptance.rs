//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with the measured numbers (visible under `--nocapture`). Criteria
//! cover planted-parameter recovery, model-vs-majority ordering, oracle
//! equivalence for diagnostics, metric arithmetic, posterior closed forms,
//! baseline ordering on the bundled corpus, abstention accounting,
//! byte-level determinism of the file pipeline, and threshold-rule
//! fidelity.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use replabel_core::analysis::{
    diagnostics, evaluate_class_labels, evaluate_prob_labels, evaluate_votes, Baseline,
    BaselineKind, ClassLabel, GoldLabels, HeuristicDiagnostics,
};
use replabel_core::artifact::{CommitArtifact, Dataset, DatasetFormat, FileChange};
use replabel_core::heuristic::{apply_all, Registry};
use replabel_core::matrix::{LabelMatrix, Vote};
use replabel_core::model::{
    abstain_rate, fit, majority_vote, posterior, predict, sample_synthetic, FitConfig,
    LabelModelParams,
};
use replabel_core::task::{export, resolve_task, ExportMode, ExportOptions, TaskDefinition};

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Planted parameters for one seed: accuracies uniform in [0.55, 0.9],
/// propensities uniform in [0.1, 0.5], balanced classes.
fn planted_params(seed: u64, m: usize) -> LabelModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let accuracies = (0..m).map(|_| rng.gen_range(0.55..=0.9)).collect();
    let propensities = (0..m).map(|_| rng.gen_range(0.1..=0.5)).collect();
    LabelModelParams::new(accuracies, propensities, 0.5)
}

/// Orient fitted parameters against the planted ones (the model's global
/// label swap is unidentifiable without gold data).
fn align(mut fitted: LabelModelParams, planted: &LabelModelParams) -> LabelModelParams {
    let direct: f64 = fitted
        .accuracies
        .iter()
        .zip(&planted.accuracies)
        .map(|(f, p)| (f - p).abs())
        .sum();
    let swapped: f64 = fitted
        .accuracies
        .iter()
        .zip(&planted.accuracies)
        .map(|(f, p)| (1.0 - f - p).abs())
        .sum();
    if swapped < direct {
        for a in fitted.accuracies.iter_mut() {
            *a = 1.0 - *a;
        }
        fitted.class_balance = 1.0 - fitted.class_balance;
    }
    fitted
}

fn gold_from_votes(matrix: &LabelMatrix, truth: &[Vote]) -> GoldLabels {
    GoldLabels::new(matrix.row_ids().iter().zip(truth).map(|(id, v)| {
        (
            id.clone(),
            ClassLabel::from_vote(*v).expect("planted labels are never abstain"),
        )
    }))
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[test]
fn criterion_1_planted_model_recovery() {
    let (m, n) = (10, 10_000);
    let mut worst_alpha: f64 = 0.0;
    let mut worst_beta: f64 = 0.0;
    let mut worst_secs: f64 = 0.0;
    for seed in SEEDS {
        let planted = planted_params(seed, m);
        let t0 = Instant::now();
        let (matrix, _) = sample_synthetic(&planted, n, seed + 1000);
        let outcome = fit(&matrix, &FitConfig::default()).expect("fit succeeds");
        let secs = t0.elapsed().as_secs_f64();
        assert!(secs < 10.0, "seed {seed}: took {secs:.2}s (limit 10s)");
        worst_secs = worst_secs.max(secs);

        let fitted = align(outcome.params, &planted);
        for (j, (f, p)) in fitted
            .accuracies
            .iter()
            .zip(&planted.accuracies)
            .enumerate()
        {
            let err = (f - p).abs();
            worst_alpha = worst_alpha.max(err);
            assert!(
                err <= 0.05,
                "seed {seed}, heuristic {j}: accuracy error {err:.4} > 0.05"
            );
        }
        for (j, (f, p)) in fitted
            .propensities
            .iter()
            .zip(&planted.propensities)
            .enumerate()
        {
            let err = (f - p).abs();
            worst_beta = worst_beta.max(err);
            assert!(
                err <= 0.02,
                "seed {seed}, heuristic {j}: propensity error {err:.4} > 0.02"
            );
        }
    }
    println!(
        "[PASS] criterion 1: planted-model recovery over {} seeds \
         (worst accuracy err {worst_alpha:.4} <= 0.05, worst propensity err \
         {worst_beta:.4} <= 0.02, worst fit {worst_secs:.2}s < 10s)",
        SEEDS.len()
    );
}

#[test]
fn criterion_2_label_model_vs_majority_vote() {
    let (m, n) = (10, 10_000);

    // Heterogeneous accuracies (spread 0.35 >= 0.2): strictly better on
    // every seed.
    let mut worst_gap = f64::INFINITY;
    for seed in SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let accuracies: Vec<f64> = (0..m)
            .map(|j| 0.55 + 0.35 * j as f64 / (m - 1) as f64)
            .collect();
        let propensities: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..=0.5)).collect();
        let planted = LabelModelParams::new(accuracies, propensities, 0.5);
        let (matrix, truth) = sample_synthetic(&planted, n, seed + 2000);
        let gold = gold_from_votes(&matrix, &truth);

        let outcome = fit(&matrix, &FitConfig::default()).expect("fit succeeds");
        let labels = predict(&outcome.params, &matrix).expect("dimensions match");
        let model_acc = evaluate_prob_labels(&labels, &gold, ClassLabel::Negative)
            .unwrap()
            .accuracy;
        let mv_acc = evaluate_votes(
            matrix.row_ids(),
            &majority_vote(&matrix),
            &gold,
            ClassLabel::Negative,
        )
        .unwrap()
        .accuracy;
        assert!(
            model_acc > mv_acc,
            "seed {seed}: model {model_acc:.4} not above majority vote {mv_acc:.4}"
        );
        worst_gap = worst_gap.min(model_acc - mv_acc);
    }

    // Homogeneous accuracies: never more than 0.01 below majority vote.
    let mut worst_homogeneous = f64::INFINITY;
    for seed in SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let propensities: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..=0.5)).collect();
        let planted = LabelModelParams::new(vec![0.7; m], propensities, 0.5);
        let (matrix, truth) = sample_synthetic(&planted, n, seed + 3000);
        let gold = gold_from_votes(&matrix, &truth);

        let outcome = fit(&matrix, &FitConfig::default()).expect("fit succeeds");
        let labels = predict(&outcome.params, &matrix).expect("dimensions match");
        let model_acc = evaluate_prob_labels(&labels, &gold, ClassLabel::Negative)
            .unwrap()
            .accuracy;
        let mv_acc = evaluate_votes(
            matrix.row_ids(),
            &majority_vote(&matrix),
            &gold,
            ClassLabel::Negative,
        )
        .unwrap()
        .accuracy;
        assert!(
            model_acc >= mv_acc - 0.01,
            "seed {seed}: model {model_acc:.4} more than 0.01 below majority vote {mv_acc:.4}"
        );
        worst_homogeneous = worst_homogeneous.min(model_acc - mv_acc);
    }
    println!(
        "[PASS] criterion 2: label model vs majority vote \
         (heterogeneous: strictly better on all {} seeds, min gap {worst_gap:+.4}; \
         homogeneous: min gap {worst_homogeneous:+.4} >= -0.01)",
        SEEDS.len()
    );
}

/// Brute-force per-row enumeration, independent of the production path.
fn diagnostics_oracle(matrix: &LabelMatrix) -> Vec<HeuristicDiagnostics> {
    let n = matrix.n_rows();
    let m = matrix.n_cols();
    (0..m)
        .map(|j| {
            let mut covered = 0usize;
            let mut overlapping = 0usize;
            let mut conflicting = 0usize;
            let mut pos = 0usize;
            let mut neg = 0usize;
            for i in 0..n {
                let v = matrix.cell(i, j);
                if v.is_abstain() {
                    continue;
                }
                covered += 1;
                if v == Vote::Positive {
                    pos += 1;
                } else {
                    neg += 1;
                }
                let mut any_other = false;
                let mut any_opposite = false;
                for k in 0..m {
                    if k == j || matrix.cell(i, k).is_abstain() {
                        continue;
                    }
                    any_other = true;
                    if matrix.cell(i, k) == v.flipped() {
                        any_opposite = true;
                    }
                }
                overlapping += any_other as usize;
                conflicting += any_opposite as usize;
            }
            let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
            HeuristicDiagnostics {
                name: matrix.column_names()[j].clone(),
                coverage: frac(covered),
                overlap: frac(overlapping),
                conflict: frac(conflicting),
                positive_votes: pos,
                negative_votes: neg,
                empirical_accuracy: None,
            }
        })
        .collect()
}

#[test]
fn criterion_3_diagnostics_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let trials = 1000;
    for _ in 0..trials {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=50);
        let cells: Vec<Vote> = (0..n * m)
            .map(|_| Vote::from_i8(rng.gen_range(-1..=1)).unwrap())
            .collect();
        let matrix = LabelMatrix::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..m).map(|j| format!("h{j}")).collect(),
            cells,
        )
        .unwrap();
        let fast = diagnostics(&matrix, None).unwrap();
        let slow = diagnostics_oracle(&matrix);
        assert_eq!(fast, slow, "matrix:\n{}", matrix.to_csv_string());
    }
    println!(
        "[PASS] criterion 3: diagnostics match the brute-force oracle exactly \
         on {trials} random matrices (up to 6 columns x 50 rows)"
    );
}

#[test]
fn criterion_4_evaluation_arithmetic() {
    let preds = vec![
        ("a".to_string(), ClassLabel::Positive),
        ("b".to_string(), ClassLabel::Positive),
        ("c".to_string(), ClassLabel::Negative),
        ("d".to_string(), ClassLabel::Negative),
    ];
    let gold = GoldLabels::new([
        ("a".to_string(), ClassLabel::Positive),
        ("b".to_string(), ClassLabel::Negative),
        ("c".to_string(), ClassLabel::Negative),
        ("d".to_string(), ClassLabel::Negative),
    ]);
    let report = evaluate_class_labels(&preds, &gold).unwrap();
    assert!((report.accuracy - 0.75).abs() < 1e-9);
    assert!((report.macro_f1 - 11.0 / 15.0).abs() < 1e-9);
    println!(
        "[PASS] criterion 4: confusion fixture gives accuracy {:.6} and macro F1 {:.6} \
         (within 1e-9 of 0.75 and 0.733...)",
        report.accuracy, report.macro_f1
    );
}

#[test]
fn criterion_5_posterior_closed_forms() {
    let single = LabelModelParams::new(vec![0.9], vec![1.0], 0.5);
    let q1 = posterior(&single, &[Vote::Positive]).unwrap();
    assert!((q1 - 0.9).abs() < 1e-9, "single witness: {q1}");

    let pair = LabelModelParams::new(vec![0.8, 0.8], vec![1.0, 1.0], 0.5);
    let q2 = posterior(&pair, &[Vote::Positive, Vote::Negative]).unwrap();
    assert!((q2 - 0.5).abs() < 1e-9, "symmetric cancellation: {q2}");

    let uneven = LabelModelParams::new(vec![0.9, 0.6], vec![1.0, 1.0], 0.5);
    let q3 = posterior(&uneven, &[Vote::Positive, Vote::Negative]).unwrap();
    assert!((q3 - 6.0 / 7.0).abs() < 1e-9, "heterogeneous case: {q3}");

    println!(
        "[PASS] criterion 5: posterior closed forms hold within 1e-9 \
         ({q1:.9}, {q2:.9}, {q3:.9})"
    );
}

#[test]
fn criterion_6_baseline_vs_model_ordering() {
    let root = repo_root();
    let dataset = Dataset::load(
        &root.join("fixtures/commits.jsonl"),
        Some(&root.join("fixtures/issues.jsonl")),
        DatasetFormat::Jsonl,
    )
    .unwrap();
    let gold = GoldLabels::load(&root.join("fixtures/gold.jsonl")).unwrap();
    let registry = Registry::load_dir(&root.join("heuristics")).unwrap();
    let task = TaskDefinition::load(&root.join("tasks/bugginess.yaml")).unwrap();
    let resolved = resolve_task(&task, &registry).unwrap();

    // Corpus shape required by the criterion.
    assert!(dataset.commits.len() >= 200);
    let linked = dataset
        .commits
        .iter()
        .filter(|c| !c.issue_ids.is_empty())
        .count();
    assert!(linked > 0, "fixture must contain issue links");
    let gitcproc = Baseline::load(BaselineKind::GitCProc, &root.join("baselines")).unwrap();
    let tufano = Baseline::load(BaselineKind::Tufano, &root.join("baselines")).unwrap();
    let message_hit = |c: &CommitArtifact| {
        let tokens: std::collections::HashSet<String> =
            replabel_core::tokenize(&c.message).into_iter().collect();
        registry.iter().any(|h| match h.body() {
            replabel_core::heuristic::HeuristicBody::Keyword { keywords, field, .. } => {
                !field.targets_issue() && keywords.iter().any(|k| tokens.contains(k))
            }
            _ => false,
        }) || gitcproc.keywords.iter().any(|k| tokens.contains(k))
            || tufano.keywords.iter().any(|k| tokens.contains(k))
    };
    let keyword_free = dataset.commits.iter().filter(|c| !message_hit(c)).count();
    assert!(
        keyword_free * 5 >= dataset.commits.len(),
        "fixture needs >=20% keyword-free commits, has {keyword_free}/{}",
        dataset.commits.len()
    );

    let (matrix, _) = apply_all(&resolved, &dataset);
    let config = FitConfig {
        class_balance: task.class_balance,
        ..FitConfig::default()
    };
    let outcome = fit(&matrix, &config).unwrap();
    let labels = predict(&outcome.params, &matrix).unwrap();
    let model = evaluate_prob_labels(&labels, &gold, task.fallback()).unwrap();

    let gitcproc_eval = evaluate_class_labels(&gitcproc.classify(&dataset), &gold).unwrap();
    let tufano_eval = evaluate_class_labels(&tufano.classify(&dataset), &gold).unwrap();

    assert!(
        model.macro_f1 >= gitcproc_eval.macro_f1,
        "label model macro F1 {:.4} below wide-keyword baseline {:.4}",
        model.macro_f1,
        gitcproc_eval.macro_f1
    );
    assert!(
        tufano_eval.precision_positive > tufano_eval.recall_positive,
        "narrow baseline should be precision-heavy: precision {:.4} vs recall {:.4}",
        tufano_eval.precision_positive,
        tufano_eval.recall_positive
    );
    println!(
        "[PASS] criterion 6: on the {}-commit fixture ({} keyword-free, {} linked) \
         label model macro F1 {:.3} >= wide-keyword baseline {:.3}; narrow baseline \
         precision {:.3} > recall {:.3}",
        dataset.commits.len(),
        keyword_free,
        linked,
        model.macro_f1,
        gitcproc_eval.macro_f1,
        tufano_eval.precision_positive,
        tufano_eval.recall_positive
    );
}

#[test]
fn criterion_7_abstention_accounting() {
    // 10 commits; exactly 2 match no heuristic at all.
    let registry = Registry::from_heuristics(vec![
        replabel_core::Heuristic::keyword(
            "kw_fix",
            replabel_core::Polarity::Positive,
            replabel_core::heuristic::MatchField::Message,
            replabel_core::heuristic::MatchMode::Token,
            vec!["fix".into(), "crash".into()],
        )
        .unwrap(),
        replabel_core::Heuristic::keyword(
            "kw_docs",
            replabel_core::Polarity::Negative,
            replabel_core::heuristic::MatchField::Message,
            replabel_core::heuristic::MatchMode::Token,
            vec!["docs".into(), "readme".into()],
        )
        .unwrap(),
    ])
    .unwrap();
    let messages = [
        "fix crash on resume",
        "fix rounding in totals",
        "crash loop in exporter fix",
        "update the docs",
        "readme overhaul",
        "docs for the new api",
        "fix readme docs",
        "crash fix docs pass",
        "quarterly dependency refresh", // no hit
        "misc chores",                  // no hit
    ];
    let commits: Vec<CommitArtifact> = messages
        .iter()
        .enumerate()
        .map(|(i, message)| CommitArtifact {
            id: format!("c{i}"),
            message: message.to_string(),
            author: None,
            timestamp: None,
            files: vec![FileChange {
                path: "f".into(),
                additions: 1,
                deletions: 0,
            }],
            issue_ids: vec![],
            extra: serde_json::Map::new(),
        })
        .collect();
    let dataset = Dataset::from_parts("abstain-fixture", commits, Default::default());
    let (matrix, _) = apply_all(&registry, &dataset);

    let config = FitConfig {
        class_balance: Some(0.5),
        ..FitConfig::default()
    };
    let outcome = fit(&matrix, &config).unwrap();
    let labels = predict(&outcome.params, &matrix).unwrap();
    let rate = abstain_rate(&labels);
    assert_eq!(rate, 2.0 / 10.0, "abstain rate must be exactly k/n");

    let task = TaskDefinition::default_task();
    let mut sink = Vec::new();
    let summary = export(
        &task,
        &labels,
        &dataset,
        ExportOptions {
            mode: ExportMode::ModelLabeledOnly,
            include_metadata: false,
        },
        &mut sink,
    )
    .unwrap();
    assert_eq!(summary.written, 8);
    assert_eq!(summary.dropped_abstained, 2);
    assert_eq!(summary.written + summary.dropped_abstained, 10);
    println!(
        "[PASS] criterion 7: abstention accounting exact (abstain rate {rate} = 2/10; \
         model-labeled-only export wrote {} of 10 rows)",
        summary.written
    );
}

#[test]
fn criterion_8_pipeline_determinism() {
    let root = repo_root();
    let bin = env!("CARGO_BIN_EXE_replabel");
    let arg = |p: &Path| p.display().to_string();

    let run_pipeline = |dir: &Path| {
        let matrix = dir.join("matrix.csv");
        let model = dir.join("model.json");
        let labels = dir.join("labels.jsonl");
        for args in [
            vec![
                "apply".to_string(),
                "--commits".into(),
                arg(&root.join("fixtures/commits.jsonl")),
                "--issues".into(),
                arg(&root.join("fixtures/issues.jsonl")),
                "--heuristics".into(),
                arg(&root.join("heuristics")),
                "--task".into(),
                arg(&root.join("tasks/bugginess.yaml")),
                "--seed".into(),
                "42".into(),
                "--out".into(),
                arg(&matrix),
            ],
            vec![
                "train".to_string(),
                "--matrix".into(),
                arg(&matrix),
                "--task".into(),
                arg(&root.join("tasks/bugginess.yaml")),
                "--seed".into(),
                "42".into(),
                "--out".into(),
                arg(&model),
            ],
            vec![
                "label".to_string(),
                "--matrix".into(),
                arg(&matrix),
                "--model".into(),
                arg(&model),
                "--seed".into(),
                "42".into(),
                "--out".into(),
                arg(&labels),
            ],
        ] {
            let output = Command::new(bin)
                .args(&args)
                .arg("--quiet")
                .output()
                .expect("binary runs");
            assert!(
                output.status.success(),
                "command {:?} failed: {}",
                args[0],
                String::from_utf8_lossy(&output.stderr)
            );
        }
        (
            std::fs::read(&matrix).unwrap(),
            std::fs::read(&model).unwrap(),
            std::fs::read(&labels).unwrap(),
        )
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (matrix_a, model_a, labels_a) = run_pipeline(dir_a.path());
    let (matrix_b, model_b, labels_b) = run_pipeline(dir_b.path());
    assert_eq!(matrix_a, matrix_b, "matrix files differ between reruns");
    assert_eq!(model_a, model_b, "model files differ between reruns");
    assert_eq!(labels_a, labels_b, "label files differ between reruns");
    println!(
        "[PASS] criterion 8: apply -> train -> label rerun is byte-identical \
         (matrix {} B, model {} B, labels {} B)",
        matrix_a.len(),
        model_a.len(),
        labels_a.len()
    );
}

#[test]
fn criterion_9_threshold_rule_fidelity() {
    let root = repo_root();
    let registry = Registry::load_dir(&root.join("heuristics")).unwrap();
    let big_change = registry.get("big_change").expect("bundled threshold rule");

    let commit_with = |n: usize| CommitArtifact {
        id: format!("c{n}"),
        message: "refresh internals".into(),
        author: None,
        timestamp: None,
        files: (0..n)
            .map(|i| FileChange {
                path: format!("f{i}"),
                additions: 1,
                deletions: 1,
            })
            .collect(),
        issue_ids: vec![],
        extra: serde_json::Map::new(),
    };
    let seven = commit_with(7);
    let six = commit_with(6);
    let ctx7 = replabel_core::heuristic::ArtifactContext::new(&seven, vec![]);
    let ctx6 = replabel_core::heuristic::ArtifactContext::new(&six, vec![]);
    assert_eq!(big_change.evaluate(&ctx7).0, Vote::Negative);
    assert_eq!(big_change.evaluate(&ctx6).0, Vote::Abstain);
    println!(
        "[PASS] criterion 9: threshold rule (file count > 6, negative polarity) \
         votes negative at 7 files and abstains at 6"
    );
}
