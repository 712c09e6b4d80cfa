//! Regenerates the bundled fixture corpus (fixtures/*.jsonl): a synthetic
//! but realistically shaped set of commits, linked issues, and gold labels
//! for exercising the full pipeline. Deterministic for a fixed seed; rerun
//! it after editing the pools and commit the result.
//!
//!     cargo run -p replabel-cli --example gen_fixtures

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use replabel_core::analysis::{Baseline, BaselineKind};
use replabel_core::artifact::{CommitArtifact, Dataset, FileChange, IssueArtifact};
use replabel_core::heuristic::{apply_all, Registry};

const SEED: u64 = 7;

const MODULES: &[&str] = &[
    "session cache",
    "export worker",
    "auth flow",
    "billing service",
    "payment gateway",
    "search indexer",
    "profile page",
    "upload pipeline",
    "retry queue",
    "config loader",
    "scheduler",
    "notification relay",
    "audit log",
    "sync engine",
    "rate limiter",
    "template renderer",
    "avatar resizer",
    "locale switcher",
    "webhook dispatcher",
    "migration runner",
];

const AUTHORS: &[&str] = &[
    "mira", "jonas", "priya", "tomasz", "ada", "kenji", "lena", "rafael",
];

struct Draft {
    message: String,
    positive: bool,
    files: std::ops::RangeInclusive<usize>,
    churn_per_file: std::ops::RangeInclusive<u64>,
    /// Some(true) links to a bug issue, Some(false) to an enhancement issue.
    link: Option<bool>,
}

impl Draft {
    fn new(message: impl Into<String>, positive: bool) -> Draft {
        Draft {
            message: message.into(),
            positive,
            files: 1..=3,
            churn_per_file: 2..=40,
            link: None,
        }
    }

    fn files(mut self, range: std::ops::RangeInclusive<usize>) -> Draft {
        self.files = range;
        self
    }

    fn churn(mut self, range: std::ops::RangeInclusive<u64>) -> Draft {
        self.churn_per_file = range;
        self
    }

    fn linked(mut self, bug: bool) -> Draft {
        self.link = Some(bug);
        self
    }
}

fn module(i: usize) -> &'static str {
    MODULES[i % MODULES.len()]
}

fn drafts() -> Vec<Draft> {
    let mut out = Vec::new();

    // Bug fixes with strong message keywords (inflected forms).
    let strong: [fn(&str) -> String; 10] = [
        |m| format!("Fixed NPE crash in {m}"),
        |m| format!("fixes deadlock in {m}"),
        |m| format!("Fixed broken state handling in {m}"),
        |m| format!("hotfix: stale reads from {m}"),
        |m| format!("Fixed incorrect totals computed by {m}"),
        |m| format!("patched buffer overflow in {m}"),
        |m| format!("bugfix: {m} drops trailing bytes"),
        |m| format!("resolved flaky failure in {m}"),
        |m| format!("fixing crashed worker restart in {m}"),
        |m| format!("Fixed regression in {m} under load"),
    ];
    for i in 0..30 {
        out.push(Draft::new(strong[i % strong.len()](module(i)), true));
    }

    // Bug fixes phrased with the narrow high-precision tokens.
    let narrow: [fn(&str, usize) -> String; 5] = [
        |m, i| format!("fix bug #{} in {m}", 1200 + i),
        |m, _| format!("fix error handling in {m}"),
        |m, _| format!("solve problem with {m} invalidation"),
        |m, i| format!("fix issue #{}: {m} timeout", 80 + i),
        |m, _| format!("fix crash when {m} input is empty"),
    ];
    for i in 0..25 {
        let mut d = Draft::new(narrow[i % narrow.len()](module(i + 7), i), true);
        if i < 5 {
            d = d.linked(true);
        }
        out.push(d);
    }

    // Bug fixes whose message carries no keyword; a linked bug report is
    // the only evidence.
    let quiet_linked: [fn(&str) -> String; 6] = [
        |m| format!("address reviewer feedback on {m}"),
        |m| format!("guard against empty payload in {m}"),
        |m| format!("handle missing session during {m} startup"),
        |m| format!("ensure {m} retries are idempotent"),
        |m| format!("avoid stale reads from {m}"),
        |m| format!("tighten bounds checking in {m}"),
    ];
    for i in 0..25 {
        let message = if i == 24 {
            String::new()
        } else {
            quiet_linked[i % quiet_linked.len()](module(i + 3))
        };
        out.push(Draft::new(message, true).linked(true));
    }

    // Bug fixes invisible to every heuristic: no keywords, no links.
    let quiet: [fn(&str) -> String; 6] = [
        |m| format!("prevent double free in {m}"),
        |m| format!("off by one in {m} boundary math"),
        |m| format!("stop {m} from dropping the first request"),
        |m| format!("make {m} tolerate empty responses"),
        |m| format!("null check before reading {m} state"),
        |m| format!("guard shutdown path of {m}"),
    ];
    for i in 0..18 {
        out.push(Draft::new(quiet[i % quiet.len()](module(i + 11)), true));
    }
    out.push(Draft::new("修复空指针崩溃", true));
    out.push(Draft::new("修复启动时的竞态条件", true));

    // Sweeping bug fixes that trip the big-change heuristic.
    for i in 0..5 {
        out.push(
            Draft::new(
                format!("Fixed cascading failure across {} and dependents", module(i)),
                true,
            )
            .files(8..=11)
            .churn(20..=120),
        );
    }

    // Features.
    let features: [fn(&str) -> String; 6] = [
        |m| format!("add bulk actions to {m}"),
        |m| format!("implement csv download for {m}"),
        |m| format!("introduce dark theme in {m}"),
        |m| format!("add keyboard shortcuts for {m}"),
        |m| format!("implement pagination controls in {m}"),
        |m| format!("add optional webhooks to {m}"),
    ];
    for i in 0..30 {
        let mut d = Draft::new(features[i % features.len()](module(i + 5)), false)
            .files(3..=12)
            .churn(10..=90);
        if i < 9 {
            d = d.linked(false);
        }
        out.push(d);
    }

    // Refactorings.
    let refactors: [fn(&str) -> String; 5] = [
        |m| format!("refactor {m} into smaller modules"),
        |m| format!("cleanup unused imports in {m}"),
        |m| format!("simplify retry logic in {m}"),
        |m| format!("restructure {m} orchestration"),
        |m| format!("refactoring: extract helpers from {m}"),
    ];
    for i in 0..22 {
        out.push(Draft::new(refactors[i % refactors.len()](module(i + 9)), false).files(2..=8));
    }

    // Documentation work, including the two classic keyword-bait typo fixes.
    let docs: [fn(&str) -> String; 5] = [
        |m| format!("update readme with {m} setup guide"),
        |m| format!("add javadoc comments to {m}"),
        |m| format!("document configuration options of {m}"),
        |_| "update changelog for next milestone".to_string(),
        |m| format!("improve inline comments in {m}"),
    ];
    for i in 0..18 {
        let mut d = Draft::new(docs[i % docs.len()](module(i + 13)), false).files(1..=2);
        if i < 3 {
            d = d.linked(false);
        }
        out.push(d);
    }
    out.push(Draft::new("fix typo in changelog entries", false).files(1..=1));
    out.push(Draft::new("fix typos across readme and changelog", false).files(1..=2));

    // Releases and merges; typically no file stats in the dataset.
    let releases: [fn(usize) -> String; 5] = [
        |i| format!("release version {}.{}.0", 1 + i / 10, i % 10),
        |_| "bump dependencies to latest minor versions".to_string(),
        |_| "merge branch develop into main".to_string(),
        |i| format!("tag release {}.{}.1 and update changelog", 1 + i / 10, i % 10),
        |_| "rebase feature branch onto main".to_string(),
    ];
    for i in 0..20 {
        out.push(Draft::new(releases[i % releases.len()](i), false).files(0..=0));
    }

    // Test work.
    let tests: [fn(&str) -> String; 4] = [
        |m| format!("add integration tests for {m}"),
        |m| format!("increase coverage of {m} edge cases"),
        |m| format!("add junit tests for {m}"),
        |m| format!("stabilize flaky testing setup for {m}"),
    ];
    for i in 0..15 {
        out.push(Draft::new(tests[i % tests.len()](module(i + 2)), false).files(2..=5));
    }

    // Style-only commits.
    let style: [fn(&str) -> String; 4] = [
        |m| format!("apply consistent formatting to {m}"),
        |m| format!("normalize whitespace in {m}"),
        |m| format!("rename internals of {m} for clarity"),
        |m| format!("lint pass over {m}"),
    ];
    for i in 0..12 {
        out.push(Draft::new(style[i % style.len()](module(i + 17)), false).files(1..=4));
    }

    // Keyword traps: bug-flavored words in commits that are not bug fixes.
    let traps: [fn(&str) -> String; 10] = [
        |m| format!("add crash reporting screen to {m}"),
        |m| format!("document error codes returned by {m}"),
        |m| format!("add tests for {m} fail conditions"),
        |m| format!("lint fixes for {m}"),
        |m| format!("upgrade {m} to avoid upstream bug warnings"),
        |m| format!("simulate crash conditions in {m} tests"),
        |m| format!("add glitch effect to {m} animations"),
        |m| format!("rework {m} error banner style"),
        |_| "update troubleshooting docs for common problems".to_string(),
        |_| "add canary test for incorrect rollout states".to_string(),
    ];
    for (i, trap) in traps.iter().enumerate() {
        out.push(Draft::new(trap(module(i + 8)), false).files(2..=6));
    }

    // Housekeeping commits with nothing for any keyword list.
    out.push(Draft::new("weekly sync of translation strings", false).files(1..=1));
    out.push(Draft::new("initial scaffolding for workspace layout", false).files(4..=6));
    out.push(Draft::new("wip", false).files(1..=2));
    out.push(Draft::new("更新翻译文件", false).files(1..=1));
    out.push(Draft::new("", false).files(0..=0));
    out.push(Draft::new("", false).files(0..=0));

    out
}

const BUG_TITLES: &[&str] = &[
    "App crashes on resume",
    "Error 500 from export endpoint",
    "NullPointerException when saving profile",
    "Broken pagination on empty list",
    "Uncaught exception during sync",
];

const BUG_BODIES: &[&str] = &[
    "Steps to reproduce: open the app, background it, resume. Happens every time.",
    "Stack trace attached below. Started after the last deploy.",
    "Expected behavior: the list stays sorted. Actual: entries vanish.",
];

const ENHANCEMENT_TITLES: &[&str] = &[
    "Add dark mode",
    "Support csv export",
    "Improve onboarding copy",
    "Question about retry semantics",
    "Update API documentation",
];

const ENHANCEMENT_BODIES: &[&str] = &[
    "It would be great to have this for the next milestone.",
    "Several users asked for this in the forum.",
];

fn fake_hash(rng: &mut ChaCha8Rng) -> String {
    (0..20)
        .map(|_| format!("{:x}", rng.gen_range(0..16u8)))
        .collect()
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let fixtures = root.join("fixtures");
    std::fs::create_dir_all(&fixtures).expect("create fixtures dir");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut drafts = drafts();
    drafts.shuffle(&mut rng);

    let mut bug_issue_count = 0usize;
    let mut enhancement_issue_count = 0usize;
    let mut issues: BTreeMap<String, IssueArtifact> = BTreeMap::new();
    let mut commits = Vec::with_capacity(drafts.len());
    let mut gold_lines = String::new();

    for (i, draft) in drafts.iter().enumerate() {
        let id = fake_hash(&mut rng);
        let n_files = rng.gen_range(draft.files.clone());
        let files: Vec<FileChange> = (0..n_files)
            .map(|k| FileChange {
                path: format!(
                    "src/{}/{}_{k}.java",
                    module(i).split(' ').next().unwrap(),
                    ["core", "util", "io", "model", "web"][k % 5]
                ),
                additions: rng.gen_range(draft.churn_per_file.clone()),
                deletions: rng.gen_range(0..=*draft.churn_per_file.end() / 2),
            })
            .collect();

        let issue_ids = match draft.link {
            Some(true) => {
                bug_issue_count += 1;
                let issue_id = format!("GH-{}", 100 + bug_issue_count);
                issues.insert(
                    issue_id.clone(),
                    IssueArtifact {
                        id: issue_id.clone(),
                        title: BUG_TITLES[bug_issue_count % BUG_TITLES.len()].to_string(),
                        body: BUG_BODIES[bug_issue_count % BUG_BODIES.len()].to_string(),
                        labels: if bug_issue_count.is_multiple_of(3) {
                            vec!["bug".into(), "regression".into()]
                        } else {
                            vec!["bug".into()]
                        },
                        extra: serde_json::Map::new(),
                    },
                );
                vec![issue_id]
            }
            Some(false) => {
                enhancement_issue_count += 1;
                let issue_id = format!("GH-{}", 200 + enhancement_issue_count);
                let label = ["enhancement", "feature", "documentation", "question"]
                    [enhancement_issue_count % 4];
                issues.insert(
                    issue_id.clone(),
                    IssueArtifact {
                        id: issue_id.clone(),
                        title: ENHANCEMENT_TITLES[enhancement_issue_count
                            % ENHANCEMENT_TITLES.len()]
                        .to_string(),
                        body: ENHANCEMENT_BODIES[enhancement_issue_count
                            % ENHANCEMENT_BODIES.len()]
                        .to_string(),
                        labels: vec![label.to_string()],
                        extra: serde_json::Map::new(),
                    },
                );
                vec![issue_id]
            }
            None => vec![],
        };

        commits.push(CommitArtifact {
            id: id.clone(),
            message: draft.message.clone(),
            author: Some(AUTHORS[rng.gen_range(0..AUTHORS.len())].to_string()),
            timestamp: Some(1_600_000_000 + i as i64 * 7_200),
            files,
            issue_ids,
            extra: serde_json::Map::new(),
        });
        gold_lines.push_str(&format!(
            "{{\"artifact_id\":\"{id}\",\"label\":\"{}\"}}\n",
            if draft.positive { "positive" } else { "negative" }
        ));
    }

    let dataset = Dataset::from_parts("fixture", commits, issues);
    dataset
        .write_jsonl(
            &fixtures.join("commits.jsonl"),
            Some(&fixtures.join("issues.jsonl")),
        )
        .expect("write fixture files");
    std::fs::write(fixtures.join("gold.jsonl"), gold_lines).expect("write gold labels");

    sanity_check(&root, &dataset, &drafts);
}

/// The corpus must keep its advertised shape: at least a fifth of the
/// commits match no message keyword (bundled heuristics and baselines
/// alike), and some commits carry issue links.
fn sanity_check(root: &Path, dataset: &Dataset, drafts: &[Draft]) {
    let registry = Registry::load_dir(&root.join("heuristics")).expect("bundled heuristics");
    let (matrix, report) = apply_all(&registry, dataset);
    assert!(report.is_clean(), "plugin errors: {report:?}");

    let gitcproc = Baseline::load(BaselineKind::GitCProc, &root.join("baselines")).unwrap();
    let tufano = Baseline::load(BaselineKind::Tufano, &root.join("baselines")).unwrap();
    let gitcproc_hits: Vec<bool> = gitcproc
        .classify(dataset)
        .into_iter()
        .map(|(_, l)| l == replabel_core::analysis::ClassLabel::Positive)
        .collect();
    let tufano_hits: Vec<bool> = tufano
        .classify(dataset)
        .into_iter()
        .map(|(_, l)| l == replabel_core::analysis::ClassLabel::Positive)
        .collect();

    let message_cols: Vec<usize> = matrix
        .column_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("kw_"))
        .map(|(j, _)| j)
        .collect();
    let mut no_keyword = 0usize;
    for i in 0..matrix.n_rows() {
        let kw_hit = message_cols.iter().any(|&j| !matrix.cell(i, j).is_abstain());
        if !kw_hit && !gitcproc_hits[i] && !tufano_hits[i] {
            no_keyword += 1;
        }
    }
    let n = matrix.n_rows();
    let linked = dataset
        .commits
        .iter()
        .filter(|c| !c.issue_ids.is_empty())
        .count();
    let positives = drafts.iter().filter(|d| d.positive).count();

    println!("fixture corpus: {n} commits, {} issues", dataset.issues.len());
    println!("  positives: {positives}, negatives: {}", n - positives);
    println!(
        "  no-keyword commits: {no_keyword} ({:.1}%)",
        100.0 * no_keyword as f64 / n as f64
    );
    println!("  linked commits: {linked} ({:.1}%)", 100.0 * linked as f64 / n as f64);
    assert!(n >= 200, "need at least 200 commits, built {n}");
    assert!(
        no_keyword * 5 >= n,
        "need >=20% keyword-free commits, got {no_keyword}/{n}"
    );
    assert!(linked > 0, "fixture must contain issue links");
}
