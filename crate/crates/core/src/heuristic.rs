//! Heuristic definition, loading, and application.
//!
//! A heuristic is a short deterministic rule that votes a class for an
//! artifact or abstains. Declarative heuristics (keyword and threshold
//! rules) live in YAML files so that contributing one is a reviewable text
//! diff; arbitrary logic plugs in through [`Registry::register_plugin`].
//!
//! Heuristics are one-sided: when a rule does not fire it abstains, it never
//! votes the opposite class. The always-negative fallback belongs to the
//! task layer, not to individual heuristics.

use std::cell::OnceCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::artifact::{CommitArtifact, Dataset, IssueArtifact};
use crate::error::{Error, Result};
use crate::matrix::{LabelMatrix, Vote};

/// Which artifact type a heuristic consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Commit,
    Issue,
}

/// The class a heuristic votes for when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn vote(self) -> Vote {
        match self {
            Polarity::Positive => Vote::Positive,
            Polarity::Negative => Vote::Negative,
        }
    }

    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Text field a keyword heuristic matches against. Issue fields are read
/// through the commit's resolved issue links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchField {
    Message,
    IssueTitle,
    IssueBody,
    IssueLabels,
}

impl MatchField {
    pub fn targets_issue(self) -> bool {
        !matches!(self, MatchField::Message)
    }

    fn index(self) -> usize {
        match self {
            MatchField::Message => 0,
            MatchField::IssueTitle => 1,
            MatchField::IssueBody => 2,
            MatchField::IssueLabels => 3,
        }
    }
}

impl FromStr for MatchField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "message" => Ok(MatchField::Message),
            "issue_title" => Ok(MatchField::IssueTitle),
            "issue_body" => Ok(MatchField::IssueBody),
            "issue_labels" => Ok(MatchField::IssueLabels),
            other => Err(format!("unknown match field `{other}`")),
        }
    }
}

/// Token matching is the default: `fix` must appear as a whole token, so
/// `prefix` does not count. Substring matching is opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Token,
    Substring,
}

/// Numeric commit property a threshold heuristic compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericField {
    FileCount,
    TotalAdditions,
    TotalDeletions,
    TotalChurn,
    MessageLength,
}

impl NumericField {
    fn extract(self, commit: &CommitArtifact) -> i64 {
        match self {
            NumericField::FileCount => commit.files.len() as i64,
            NumericField::TotalAdditions => {
                commit.files.iter().map(|f| f.additions).sum::<u64>() as i64
            }
            NumericField::TotalDeletions => {
                commit.files.iter().map(|f| f.deletions).sum::<u64>() as i64
            }
            NumericField::TotalChurn => commit
                .files
                .iter()
                .map(|f| f.additions + f.deletions)
                .sum::<u64>() as i64,
            NumericField::MessageLength => commit.message.chars().count() as i64,
        }
    }
}

impl FromStr for NumericField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "file_count" => Ok(NumericField::FileCount),
            "total_additions" => Ok(NumericField::TotalAdditions),
            "total_deletions" => Ok(NumericField::TotalDeletions),
            "total_churn" => Ok(NumericField::TotalChurn),
            "message_length" => Ok(NumericField::MessageLength),
            other => Err(format!("unknown numeric field `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Comparator {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

/// Error raised by a plugin heuristic. Converted to an abstain and counted;
/// a misbehaving plugin never aborts a run.
#[derive(Debug, Clone)]
pub struct PluginError {
    pub message: String,
}

impl PluginError {
    pub fn new(message: impl Into<String>) -> Self {
        PluginError {
            message: message.into(),
        }
    }
}

impl std::fmt::Display for PluginError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<String> for PluginError {
    fn from(message: String) -> Self {
        PluginError { message }
    }
}

impl From<&str> for PluginError {
    fn from(message: &str) -> Self {
        PluginError {
            message: message.to_string(),
        }
    }
}

pub type PluginFn =
    dyn Fn(&ArtifactContext<'_>) -> std::result::Result<Vote, PluginError> + Send + Sync;

#[derive(Clone)]
pub enum HeuristicBody {
    Keyword {
        keywords: Vec<String>,
        field: MatchField,
        mode: MatchMode,
    },
    Threshold {
        field: NumericField,
        op: Comparator,
        bound: i64,
    },
    Plugin(Arc<PluginFn>),
}

impl std::fmt::Debug for HeuristicBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HeuristicBody::Keyword {
                keywords,
                field,
                mode,
            } => f
                .debug_struct("Keyword")
                .field("keywords", keywords)
                .field("field", field)
                .field("mode", mode)
                .finish(),
            HeuristicBody::Threshold { field, op, bound } => f
                .debug_struct("Threshold")
                .field("field", field)
                .field("op", op)
                .field("bound", bound)
                .finish(),
            HeuristicBody::Plugin(_) => f.write_str("Plugin(..)"),
        }
    }
}

/// A named labeling rule. Names are stable identifiers: they become matrix
/// columns and report rows.
#[derive(Debug, Clone)]
pub struct Heuristic {
    name: String,
    artifact_kind: ArtifactKind,
    polarity: Polarity,
    /// Set by task polarity overrides; negates every emitted vote.
    flipped: bool,
    body: HeuristicBody,
}

impl Heuristic {
    pub fn keyword(
        name: impl Into<String>,
        polarity: Polarity,
        field: MatchField,
        mode: MatchMode,
        keywords: Vec<String>,
    ) -> Result<Heuristic> {
        let name = name.into();
        validate_name(&name)?;
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.trim().to_lowercase())
            .collect();
        if keywords.is_empty() || keywords.iter().any(|k| k.is_empty()) {
            return Err(Error::InvalidSpec {
                file: "<api>".into(),
                name: Some(name),
                message: "keyword heuristic requires a non-empty keyword list".into(),
            });
        }
        let artifact_kind = if field.targets_issue() {
            ArtifactKind::Issue
        } else {
            ArtifactKind::Commit
        };
        Ok(Heuristic {
            name,
            artifact_kind,
            polarity,
            flipped: false,
            body: HeuristicBody::Keyword {
                keywords,
                field,
                mode,
            },
        })
    }

    pub fn threshold(
        name: impl Into<String>,
        polarity: Polarity,
        field: NumericField,
        op: Comparator,
        bound: i64,
    ) -> Result<Heuristic> {
        let name = name.into();
        validate_name(&name)?;
        Ok(Heuristic {
            name,
            artifact_kind: ArtifactKind::Commit,
            polarity,
            flipped: false,
            body: HeuristicBody::Threshold { field, op, bound },
        })
    }

    pub fn plugin<F>(
        name: impl Into<String>,
        artifact_kind: ArtifactKind,
        polarity: Polarity,
        f: F,
    ) -> Result<Heuristic>
    where
        F: Fn(&ArtifactContext<'_>) -> std::result::Result<Vote, PluginError>
            + Send
            + Sync
            + 'static,
    {
        let name = name.into();
        validate_name(&name)?;
        Ok(Heuristic {
            name,
            artifact_kind,
            polarity,
            flipped: false,
            body: HeuristicBody::Plugin(Arc::new(f)),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn artifact_kind(&self) -> ArtifactKind {
        self.artifact_kind
    }

    /// Declared polarity, before any task override.
    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    /// Polarity after task overrides.
    pub fn effective_polarity(&self) -> Polarity {
        if self.flipped {
            self.polarity.opposite()
        } else {
            self.polarity
        }
    }

    pub(crate) fn with_flip(mut self, flipped: bool) -> Heuristic {
        self.flipped = flipped;
        self
    }

    pub fn body(&self) -> &HeuristicBody {
        &self.body
    }

    /// Evaluate against one artifact context. Plugin failures surface as an
    /// abstain plus the error; declarative rules cannot fail.
    pub fn evaluate(&self, ctx: &ArtifactContext<'_>) -> (Vote, Option<PluginError>) {
        let (raw, err) = match &self.body {
            HeuristicBody::Keyword {
                keywords,
                field,
                mode,
            } => {
                // An issue-targeting heuristic abstains on unlinked commits.
                if field.targets_issue() && ctx.issues.is_empty() {
                    (Vote::Abstain, None)
                } else {
                    let fired = match mode {
                        MatchMode::Token => {
                            let tokens = ctx.tokens(*field);
                            keywords.iter().any(|k| tokens.contains(k))
                        }
                        MatchMode::Substring => {
                            let text = ctx.lower_text(*field);
                            keywords.iter().any(|k| text.contains(k))
                        }
                    };
                    if fired {
                        (self.polarity.vote(), None)
                    } else {
                        (Vote::Abstain, None)
                    }
                }
            }
            HeuristicBody::Threshold { field, op, bound } => {
                if op.eval(field.extract(ctx.commit), *bound) {
                    (self.polarity.vote(), None)
                } else {
                    (Vote::Abstain, None)
                }
            }
            HeuristicBody::Plugin(f) => {
                let outcome =
                    std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(ctx)));
                match outcome {
                    Ok(Ok(vote)) => (vote, None),
                    Ok(Err(e)) => (Vote::Abstain, Some(e)),
                    Err(payload) => {
                        let message = if let Some(s) = payload.downcast_ref::<&str>() {
                            (*s).to_string()
                        } else if let Some(s) = payload.downcast_ref::<String>() {
                            s.clone()
                        } else {
                            "plugin panicked".to_string()
                        };
                        (Vote::Abstain, Some(PluginError::new(message)))
                    }
                }
            }
        };
        let vote = if self.flipped { raw.flipped() } else { raw };
        (vote, err)
    }
}

fn validate_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "artifact_id"
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSpec {
            file: "<api>".into(),
            name: Some(name.to_string()),
            message: "heuristic names must be ascii alphanumeric plus `_.-`".into(),
        })
    }
}

/// Lowercase, split on every non-alphanumeric character, drop empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// One commit plus its resolved issue links, with lazily built per-field
/// token sets so that m heuristics share one tokenization pass.
pub struct ArtifactContext<'a> {
    commit: &'a CommitArtifact,
    issues: Vec<&'a IssueArtifact>,
    lower: [OnceCell<String>; 4],
    tokens: [OnceCell<HashSet<String>>; 4],
}

impl<'a> ArtifactContext<'a> {
    pub fn new(commit: &'a CommitArtifact, issues: Vec<&'a IssueArtifact>) -> Self {
        ArtifactContext {
            commit,
            issues,
            lower: Default::default(),
            tokens: Default::default(),
        }
    }

    /// Build a context for every commit in the dataset, resolving links.
    pub fn for_dataset(dataset: &'a Dataset) -> Vec<ArtifactContext<'a>> {
        dataset
            .commits
            .iter()
            .map(|commit| {
                let issues = commit
                    .issue_ids
                    .iter()
                    .filter_map(|id| dataset.issues.get(id))
                    .collect();
                ArtifactContext::new(commit, issues)
            })
            .collect()
    }

    pub fn commit(&self) -> &CommitArtifact {
        self.commit
    }

    pub fn issues(&self) -> &[&'a IssueArtifact] {
        &self.issues
    }

    fn field_text(&self, field: MatchField) -> String {
        match field {
            MatchField::Message => self.commit.message.clone(),
            MatchField::IssueTitle => join(self.issues.iter().map(|i| i.title.as_str())),
            MatchField::IssueBody => join(self.issues.iter().map(|i| i.body.as_str())),
            MatchField::IssueLabels => join(
                self.issues
                    .iter()
                    .flat_map(|i| i.labels.iter().map(|l| l.as_str())),
            ),
        }
    }

    fn lower_text(&self, field: MatchField) -> &str {
        self.lower[field.index()].get_or_init(|| self.field_text(field).to_lowercase())
    }

    fn tokens(&self, field: MatchField) -> &HashSet<String> {
        self.tokens[field.index()]
            .get_or_init(|| tokenize(&self.field_text(field)).into_iter().collect())
    }
}

fn join<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    // Newline separator keeps substring matches from spanning two sources.
    parts.collect::<Vec<_>>().join("\n")
}

/// Ordered collection of heuristics with unique names. Column order of every
/// matrix equals registry order; registries are immutable during a run.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<Heuristic>,
    origins: HashMap<String, String>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn from_heuristics(heuristics: Vec<Heuristic>) -> Result<Registry> {
        let mut registry = Registry::new();
        for h in heuristics {
            registry.push(h, "<api>")?;
        }
        Ok(registry)
    }

    /// Load every `*.yaml` / `*.yml` file in a directory, ordered by file
    /// name then in-file position.
    pub fn load_dir(dir: &Path) -> Result<Registry> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(dir, e))?
            .into_iter()
            .map(|entry| entry.path())
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("yaml") | Some("yml")
                )
            })
            .collect();
        files.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));

        let mut registry = Registry::new();
        for file in &files {
            let label = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            let text = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
            for spec in parse_spec_file(&text, &label)? {
                registry.push(spec, &label)?;
            }
        }
        Ok(registry)
    }

    fn push(&mut self, heuristic: Heuristic, origin: &str) -> Result<()> {
        if let Some(first) = self.origins.get(heuristic.name()) {
            return Err(Error::DuplicateHeuristic {
                name: heuristic.name().to_string(),
                first: first.clone(),
                second: origin.to_string(),
            });
        }
        self.origins
            .insert(heuristic.name().to_string(), origin.to_string());
        self.entries.push(heuristic);
        Ok(())
    }

    /// Append a programmatic heuristic. The callable must be a pure,
    /// deterministic function of its artifact context.
    pub fn register_plugin<F>(
        &mut self,
        name: impl Into<String>,
        artifact_kind: ArtifactKind,
        polarity: Polarity,
        f: F,
    ) -> Result<()>
    where
        F: Fn(&ArtifactContext<'_>) -> std::result::Result<Vote, PluginError>
            + Send
            + Sync
            + 'static,
    {
        let heuristic = Heuristic::plugin(name, artifact_kind, polarity, f)?;
        self.push(heuristic, "<plugin>")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Heuristic> {
        self.entries.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|h| h.name().to_string()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Heuristic> {
        self.entries.iter().find(|h| h.name() == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub(crate) fn from_entries_unchecked(entries: Vec<Heuristic>) -> Registry {
        let origins = entries
            .iter()
            .map(|h| (h.name().to_string(), "<resolved>".to_string()))
            .collect();
        Registry { entries, origins }
    }

    /// SHA-256 over a canonical description of every heuristic, in order.
    /// Plugin bodies are opaque; they contribute name and declared shape only.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};

        #[derive(Serialize)]
        struct Descriptor<'a> {
            name: &'a str,
            artifact_kind: ArtifactKind,
            polarity: Polarity,
            flipped: bool,
            kind: &'static str,
            params: serde_json::Value,
        }

        let descriptors: Vec<Descriptor<'_>> = self
            .entries
            .iter()
            .map(|h| {
                let (kind, params) = match &h.body {
                    HeuristicBody::Keyword {
                        keywords,
                        field,
                        mode,
                    } => (
                        "keyword",
                        serde_json::json!({
                            "keywords": keywords,
                            "field": field,
                            "mode": mode,
                        }),
                    ),
                    HeuristicBody::Threshold { field, op, bound } => (
                        "threshold",
                        serde_json::json!({"field": field, "op": op, "bound": bound}),
                    ),
                    HeuristicBody::Plugin(_) => ("plugin", serde_json::json!({})),
                };
                Descriptor {
                    name: h.name(),
                    artifact_kind: h.artifact_kind,
                    polarity: h.polarity,
                    flipped: h.flipped,
                    kind,
                    params,
                }
            })
            .collect();
        let canonical = serde_json::to_string(&descriptors).expect("descriptors serialize");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    kind: String,
    polarity: Polarity,
    #[serde(default)]
    artifact_kind: Option<ArtifactKind>,
    #[serde(default)]
    keywords: Option<Vec<String>>,
    #[serde(default)]
    field: Option<String>,
    #[serde(default)]
    mode: Option<MatchMode>,
    #[serde(default)]
    op: Option<Comparator>,
    #[serde(default)]
    bound: Option<i64>,
}

fn parse_spec_file(text: &str, file: &str) -> Result<Vec<Heuristic>> {
    let mut specs = Vec::new();
    for document in serde_yaml::Deserializer::from_str(text) {
        let value = serde_yaml::Value::deserialize(document).map_err(|e| Error::InvalidSpec {
            file: file.to_string(),
            name: None,
            message: e.to_string(),
        })?;
        match value {
            serde_yaml::Value::Null => continue,
            serde_yaml::Value::Sequence(items) => {
                for item in items {
                    specs.push(raw_spec_from_value(item, file)?);
                }
            }
            mapping @ serde_yaml::Value::Mapping(_) => {
                specs.push(raw_spec_from_value(mapping, file)?);
            }
            _ => {
                return Err(Error::InvalidSpec {
                    file: file.to_string(),
                    name: None,
                    message: "expected a spec mapping or a sequence of specs".into(),
                })
            }
        }
    }
    specs
        .into_iter()
        .map(|raw| build_heuristic(raw, file))
        .collect()
}

fn raw_spec_from_value(value: serde_yaml::Value, file: &str) -> Result<RawSpec> {
    serde_yaml::from_value(value).map_err(|e| Error::InvalidSpec {
        file: file.to_string(),
        name: None,
        message: e.to_string(),
    })
}

fn build_heuristic(raw: RawSpec, file: &str) -> Result<Heuristic> {
    let invalid = |name: &str, message: String| Error::InvalidSpec {
        file: file.to_string(),
        name: Some(name.to_string()),
        message,
    };
    let heuristic = match raw.kind.as_str() {
        "keyword" => {
            let keywords = raw
                .keywords
                .ok_or_else(|| invalid(&raw.name, "missing `keywords`".into()))?;
            let field_str = raw
                .field
                .ok_or_else(|| invalid(&raw.name, "missing `field`".into()))?;
            let field = MatchField::from_str(&field_str).map_err(|e| invalid(&raw.name, e))?;
            let mode = raw.mode.unwrap_or(MatchMode::Token);
            Heuristic::keyword(raw.name.clone(), raw.polarity, field, mode, keywords).map_err(
                |e| match e {
                    Error::InvalidSpec { name, message, .. } => Error::InvalidSpec {
                        file: file.to_string(),
                        name,
                        message,
                    },
                    other => other,
                },
            )?
        }
        "threshold" => {
            let field_str = raw
                .field
                .ok_or_else(|| invalid(&raw.name, "missing `field`".into()))?;
            let field = NumericField::from_str(&field_str).map_err(|e| invalid(&raw.name, e))?;
            let op = raw
                .op
                .ok_or_else(|| invalid(&raw.name, "missing `op`".into()))?;
            let bound = raw
                .bound
                .ok_or_else(|| invalid(&raw.name, "missing `bound`".into()))?;
            Heuristic::threshold(raw.name.clone(), raw.polarity, field, op, bound)?
        }
        "plugin" => {
            return Err(invalid(
                &raw.name,
                "plugin heuristics are registered through the API, not spec files".into(),
            ))
        }
        other => return Err(invalid(&raw.name, format!("unknown kind `{other}`"))),
    };
    if let Some(declared) = raw.artifact_kind {
        if declared != heuristic.artifact_kind() {
            return Err(invalid(
                &raw.name,
                format!(
                    "artifact_kind `{declared:?}` is inconsistent with the heuristic's field",
                ),
            ));
        }
    }
    Ok(heuristic)
}

/// Per-run accounting of plugin failures, keyed by heuristic name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ApplyReport {
    pub error_counts: BTreeMap<String, u64>,
    /// First error message seen per failing heuristic.
    pub sample_errors: BTreeMap<String, String>,
}

impl ApplyReport {
    pub fn total_errors(&self) -> u64 {
        self.error_counts.values().sum()
    }

    pub fn is_clean(&self) -> bool {
        self.error_counts.is_empty()
    }
}

/// Apply every registry heuristic to every commit, producing the vote
/// matrix. Deterministic: rows follow dataset order, columns follow registry
/// order, and heuristics are pure functions of their artifact.
pub fn apply_all(registry: &Registry, dataset: &Dataset) -> (LabelMatrix, ApplyReport) {
    let contexts = ArtifactContext::for_dataset(dataset);
    let mut cells = Vec::with_capacity(contexts.len() * registry.len());
    let mut report = ApplyReport::default();
    for ctx in &contexts {
        for heuristic in registry.iter() {
            let (vote, err) = heuristic.evaluate(ctx);
            if let Some(e) = err {
                *report
                    .error_counts
                    .entry(heuristic.name().to_string())
                    .or_default() += 1;
                report
                    .sample_errors
                    .entry(heuristic.name().to_string())
                    .or_insert(e.message);
            }
            cells.push(vote);
        }
    }
    let row_ids = dataset.commits.iter().map(|c| c.id.clone()).collect();
    let matrix = LabelMatrix::new(row_ids, registry.names(), cells)
        .expect("cells sized by construction");
    (matrix, report)
}
