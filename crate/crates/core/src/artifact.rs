//! Normalized software-repository artifacts (commits, issues) and dataset
//! loading, linking, and validation.
//!
//! Datasets are UTF-8 line-delimited records, one artifact per line, so a
//! corpus of a few hundred thousand commits streams without staging the
//! whole file as a single document. Unknown fields are kept on the artifact
//! (and counted in dataset provenance) rather than silently dropped.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One changed file within a commit, with pre-computed line stats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    #[serde(default)]
    pub additions: u64,
    #[serde(default)]
    pub deletions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitArtifact {
    /// Opaque identifier (typically the commit hash). Non-empty, unique per dataset.
    pub id: String,
    /// Commit message, stored as-is; may be empty.
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    /// Seconds since epoch. No timezone logic anywhere in the toolkit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<FileChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issue_ids: Vec<String>,
    /// Fields outside the schema, preserved verbatim.
    #[serde(flatten, skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueArtifact {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(flatten, skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Supported on-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One JSON object per line.
    Jsonl,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json-lines" => Ok(DatasetFormat::Jsonl),
            other => Err(Error::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "jsonl")
    }
}

/// How to treat commit -> issue references that do not resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkPolicy {
    /// Error on the first dangling reference.
    Strict,
    /// Remove dangling references, keeping count.
    Drop,
    /// Keep dangling references, keeping count.
    Keep,
}

impl FromStr for LinkPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(LinkPolicy::Strict),
            "drop" => Ok(LinkPolicy::Drop),
            "keep" => Ok(LinkPolicy::Keep),
            other => Err(Error::UnknownFormat {
                format: other.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for LinkPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LinkPolicy::Strict => "strict",
            LinkPolicy::Drop => "drop",
            LinkPolicy::Keep => "keep",
        };
        write!(f, "{s}")
    }
}

/// An immutable, loaded corpus. Commit order is input file order; issues are
/// keyed by id. Safe to share across threads once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub commits: Vec<CommitArtifact>,
    pub issues: BTreeMap<String, IssueArtifact>,
    pub provenance: BTreeMap<String, serde_json::Value>,
}

impl Dataset {
    pub fn from_parts(
        name: impl Into<String>,
        commits: Vec<CommitArtifact>,
        issues: BTreeMap<String, IssueArtifact>,
    ) -> Self {
        Dataset {
            name: name.into(),
            commits,
            issues,
            provenance: BTreeMap::new(),
        }
    }

    /// Load commits (and, when given, issues) from disk. The dataset name is
    /// the commit file stem.
    pub fn load(
        commits_path: &Path,
        issues_path: Option<&Path>,
        format: DatasetFormat,
    ) -> Result<Dataset> {
        let commits = load_commits(commits_path, format)?;
        let issues = match issues_path {
            Some(p) => load_issues(p)?,
            None => BTreeMap::new(),
        };
        let name = commits_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string());
        let mut dataset = Dataset::from_parts(name, commits, issues);
        dataset.provenance.insert(
            "source.commits".into(),
            commits_path.to_string_lossy().into_owned().into(),
        );
        if let Some(p) = issues_path {
            dataset.provenance.insert(
                "source.issues".into(),
                p.to_string_lossy().into_owned().into(),
            );
        }
        dataset
            .provenance
            .insert("format".into(), format.to_string().into());
        record_unknown_fields(&mut dataset);
        Ok(dataset)
    }

    /// Serialize back to line-delimited records (issues sorted by id).
    pub fn write_jsonl(&self, commits_path: &Path, issues_path: Option<&Path>) -> Result<()> {
        let mut out = String::new();
        for commit in &self.commits {
            out.push_str(&serde_json::to_string(commit).expect("commit serializes"));
            out.push('\n');
        }
        std::fs::write(commits_path, out).map_err(|e| Error::io(commits_path, e))?;
        if let Some(path) = issues_path {
            let mut out = String::new();
            for issue in self.issues.values() {
                out.push_str(&serde_json::to_string(issue).expect("issue serializes"));
                out.push('\n');
            }
            std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn record_unknown_fields(dataset: &mut Dataset) {
    let mut commit_fields: BTreeMap<String, u64> = BTreeMap::new();
    for commit in &dataset.commits {
        for key in commit.extra.keys() {
            *commit_fields.entry(key.clone()).or_default() += 1;
        }
    }
    if !commit_fields.is_empty() {
        dataset.provenance.insert(
            "unknown_fields.commits".into(),
            serde_json::to_value(commit_fields).expect("map serializes"),
        );
    }
    let mut issue_fields: BTreeMap<String, u64> = BTreeMap::new();
    for issue in dataset.issues.values() {
        for key in issue.extra.keys() {
            *issue_fields.entry(key.clone()).or_default() += 1;
        }
    }
    if !issue_fields.is_empty() {
        dataset.provenance.insert(
            "unknown_fields.issues".into(),
            serde_json::to_value(issue_fields).expect("map serializes"),
        );
    }
}

/// Load commit artifacts in file order. Blank lines are skipped; an empty
/// file is a valid (empty) dataset.
pub fn load_commits(path: &Path, format: DatasetFormat) -> Result<Vec<CommitArtifact>> {
    let DatasetFormat::Jsonl = format;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut commits = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let commit: CommitArtifact = serde_json::from_str(raw)
            .map_err(|e| Error::parse(path, Some(line), e.to_string()))?;
        if commit.id.is_empty() {
            return Err(Error::parse(path, Some(line), "commit id is empty"));
        }
        for file in &commit.files {
            if file.path.is_empty() {
                return Err(Error::parse(path, Some(line), "file change with empty path"));
            }
        }
        if !seen.insert(commit.id.clone()) {
            return Err(Error::DuplicateCommitId {
                id: commit.id,
                line,
            });
        }
        commits.push(commit);
    }
    Ok(commits)
}

/// Load issues keyed by id; duplicate ids are rejected.
pub fn load_issues(path: &Path) -> Result<BTreeMap<String, IssueArtifact>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut issues = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let issue: IssueArtifact = serde_json::from_str(raw)
            .map_err(|e| Error::parse(path, Some(line), e.to_string()))?;
        if issue.id.is_empty() {
            return Err(Error::parse(path, Some(line), "issue id is empty"));
        }
        if issues.contains_key(&issue.id) {
            return Err(Error::DuplicateIssueId {
                id: issue.id,
                line,
            });
        }
        issues.insert(issue.id.clone(), issue);
    }
    Ok(issues)
}

/// Resolve commit -> issue references under the given policy and record
/// linking statistics in provenance. The input dataset is left untouched.
pub fn link(dataset: &Dataset, policy: LinkPolicy) -> Result<Dataset> {
    let mut out = dataset.clone();
    let mut dangling: u64 = 0;
    let mut commits_with_links: u64 = 0;
    for commit in &mut out.commits {
        let mut resolved = false;
        for issue_id in &commit.issue_ids {
            if dataset.issues.contains_key(issue_id) {
                resolved = true;
            } else {
                if policy == LinkPolicy::Strict {
                    return Err(Error::DanglingIssueRef {
                        commit_id: commit.id.clone(),
                        issue_id: issue_id.clone(),
                    });
                }
                dangling += 1;
            }
        }
        if policy == LinkPolicy::Drop {
            commit
                .issue_ids
                .retain(|issue_id| dataset.issues.contains_key(issue_id));
        }
        if resolved {
            commits_with_links += 1;
        }
    }
    let fraction = if out.commits.is_empty() {
        0.0
    } else {
        commits_with_links as f64 / out.commits.len() as f64
    };
    out.provenance
        .insert("link.policy".into(), policy.to_string().into());
    out.provenance
        .insert("link.commits_with_links".into(), commits_with_links.into());
    out.provenance
        .insert("link.resolved_fraction".into(), fraction.into());
    out.provenance
        .insert("link.dangling_refs".into(), dangling.into());
    Ok(out)
}

/// Data-quality report over a dataset. Purely observational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total_commits: usize,
    pub total_issues: usize,
    /// Commits whose message is empty or whitespace-only.
    pub empty_message_ids: Vec<String>,
    pub empty_message_fraction: f64,
    /// Commits whose non-whitespace characters are mostly non-ASCII.
    pub non_ascii_dominant_ids: Vec<String>,
    /// Commits with no file changes attached.
    pub zero_file_ids: Vec<String>,
}

impl ValidationReport {
    pub fn empty_message_count(&self) -> usize {
        self.empty_message_ids.len()
    }
}

/// Survey message and file-change quality; never mutates the dataset.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut empty_message_ids = Vec::new();
    let mut non_ascii_dominant_ids = Vec::new();
    let mut zero_file_ids = Vec::new();
    for commit in &dataset.commits {
        if commit.message.trim().is_empty() {
            empty_message_ids.push(commit.id.clone());
        } else {
            let chars: Vec<char> = commit
                .message
                .chars()
                .filter(|c| !c.is_whitespace())
                .collect();
            let non_ascii = chars.iter().filter(|c| !c.is_ascii()).count();
            if !chars.is_empty() && non_ascii * 2 > chars.len() {
                non_ascii_dominant_ids.push(commit.id.clone());
            }
        }
        if commit.files.is_empty() {
            zero_file_ids.push(commit.id.clone());
        }
    }
    let fraction = if dataset.commits.is_empty() {
        0.0
    } else {
        empty_message_ids.len() as f64 / dataset.commits.len() as f64
    };
    ValidationReport {
        total_commits: dataset.commits.len(),
        total_issues: dataset.issues.len(),
        empty_message_ids,
        empty_message_fraction: fraction,
        non_ascii_dominant_ids,
        zero_file_ids,
    }
}
