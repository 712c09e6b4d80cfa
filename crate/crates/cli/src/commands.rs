//! Subcommand implementations. Every command that writes an artifact also
//! writes a `<out>.manifest.json` sidecar recording the resolved config and
//! input/output hashes; downstream commands use those to refuse stale inputs.

use std::collections::{BTreeMap, HashSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::{SecondsFormat, Utc};

use replabel_core::analysis::{
    diagnostics, evaluate_class_labels, evaluate_prob_labels, loo_contributions, render_report,
    Baseline, BaselineKind, ClassLabel, EvalReport, FitCache, GoldLabels, ReportData,
};
use replabel_core::artifact::{link, validate, Dataset, DatasetFormat, LinkPolicy};
use replabel_core::heuristic::{apply_all, Registry};
use replabel_core::manifest::{sha256_file, verify_fresh, RunManifest};
use replabel_core::matrix::LabelMatrix;
use replabel_core::model::{
    abstain_rate, fit, predict, read_prob_labels, write_prob_labels, FitConfig, FittedModel,
};
use replabel_core::task::{export, resolve_task, ExportMode, ExportOptions, TaskDefinition};
use replabel_core::Error;

use crate::{Command, FitFlags};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Bad invocation (missing or contradictory flags).
    Usage(String),
    /// Inputs that do not belong together (model vs matrix).
    Mismatch(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Mismatch(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Per-run bookkeeping that becomes the manifest.
struct RunContext {
    command: &'static str,
    started_at: String,
    t0: Instant,
    inputs: BTreeMap<String, String>,
    registry_hash: Option<String>,
    dataset_name: Option<String>,
    seed: Option<u64>,
}

impl RunContext {
    fn new(command: &'static str, seed: Option<u64>) -> RunContext {
        RunContext {
            command,
            started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            t0: Instant::now(),
            inputs: BTreeMap::new(),
            registry_hash: None,
            dataset_name: None,
            seed,
        }
    }

    fn record_input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Record every spec file in a heuristics directory.
    fn record_spec_dir(&mut self, dir: &Path) -> CliResult<()> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::Io {
                path: dir.into(),
                source: e,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("yaml") | Some("yml")
                )
            })
            .collect();
        files.sort();
        for file in files {
            self.record_input(&file)?;
        }
        Ok(())
    }

    fn finish(self, config: serde_json::Value, out: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            tool: "replabel".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            config,
            inputs: self.inputs,
            registry_hash: self.registry_hash,
            dataset_name: self.dataset_name,
            seed: self.seed,
            started_at: self.started_at,
            duration_ms: self.t0.elapsed().as_millis() as u64,
            output: out.display().to_string(),
            output_hash: sha256_file(out)?,
        };
        manifest.save_beside(out)?;
        Ok(())
    }
}

fn load_task(path: Option<&Path>, ctx: &mut RunContext) -> CliResult<TaskDefinition> {
    match path {
        Some(p) => {
            ctx.record_input(p)?;
            Ok(TaskDefinition::load(p)?)
        }
        None => Ok(TaskDefinition::default_task()),
    }
}

fn resolve_fallback(flag: Option<&str>, task: &TaskDefinition) -> CliResult<ClassLabel> {
    match flag {
        Some(s) => Ok(ClassLabel::from_str(s).map_err(|_| {
            CliError::Usage(format!(
                "--fallback must be `positive` or `negative`, got `{s}`"
            ))
        })?),
        None => Ok(task.fallback()),
    }
}

pub fn run(command: Command, quiet: bool) -> CliResult<()> {
    match command {
        Command::Apply {
            commits,
            issues,
            heuristics,
            task,
            link_policy,
            format,
            out,
            seed,
        } => cmd_apply(
            commits,
            issues,
            heuristics,
            task,
            link_policy,
            format,
            out,
            seed,
            quiet,
        ),
        Command::Train {
            matrix,
            out,
            fit,
            task,
            seed,
        } => cmd_train(matrix, out, fit, task, seed, quiet),
        Command::Label {
            matrix,
            model,
            out,
            seed,
        } => cmd_label(matrix, model, out, seed, quiet),
        Command::Eval {
            labels,
            baseline,
            commits,
            baselines_dir,
            format,
            gold,
            task,
            fallback,
            out,
            seed,
        } => cmd_eval(
            labels,
            baseline,
            commits,
            baselines_dir,
            format,
            gold,
            task,
            fallback,
            out,
            seed,
            quiet,
        ),
        Command::Diagnostics {
            matrix,
            gold,
            out,
            seed,
        } => cmd_diagnostics(matrix, gold, out, seed, quiet),
        Command::Report {
            matrix,
            base_matrix,
            gold,
            task,
            fit,
            out,
            seed,
        } => cmd_report(matrix, base_matrix, gold, task, fit, out, seed, quiet),
        Command::Export {
            labels,
            commits,
            format,
            task,
            mode,
            include_meta,
            out,
            seed,
        } => cmd_export(
            labels,
            commits,
            format,
            task,
            mode,
            include_meta,
            out,
            seed,
            quiet,
        ),
        Command::Validate {
            commits,
            issues,
            link_policy,
            format,
            out,
        } => cmd_validate(commits, issues, link_policy, format, out, quiet),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_apply(
    commits: PathBuf,
    issues: Option<PathBuf>,
    heuristics: PathBuf,
    task: Option<PathBuf>,
    link_policy: String,
    format: String,
    out: PathBuf,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("apply", seed);
    let format = DatasetFormat::from_str(&format)?;
    let policy = LinkPolicy::from_str(&link_policy)?;
    ctx.record_input(&commits)?;
    if let Some(p) = &issues {
        ctx.record_input(p)?;
    }
    ctx.record_spec_dir(&heuristics)?;

    let dataset = Dataset::load(&commits, issues.as_deref(), format)?;
    let dataset = link(&dataset, policy)?;
    ctx.dataset_name = Some(dataset.name.clone());

    let registry = Registry::load_dir(&heuristics)?;
    let task_def = load_task(task.as_deref(), &mut ctx)?;
    let resolved = resolve_task(&task_def, &registry)?;
    ctx.registry_hash = Some(resolved.content_hash());

    let (matrix, apply_report) = apply_all(&resolved, &dataset);
    if !apply_report.is_clean() && !quiet {
        for (name, count) in &apply_report.error_counts {
            eprintln!(
                "warning: heuristic `{name}` failed on {count} artifact(s) (first: {})",
                apply_report.sample_errors[name]
            );
        }
    }
    matrix.write_csv(&out)?;
    let config = serde_json::json!({
        "task": task_def.name,
        "link_policy": policy.to_string(),
        "format": format.to_string(),
        "heuristics_dir": heuristics.display().to_string(),
    });
    ctx.finish(config, &out)?;
    if !quiet {
        eprintln!(
            "applied {} heuristics to {} commits -> {}",
            matrix.n_cols(),
            matrix.n_rows(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_train(
    matrix_path: PathBuf,
    out: PathBuf,
    flags: FitFlags,
    task: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("train", seed);
    ctx.record_input(&matrix_path)?;
    let matrix = LabelMatrix::read_csv(&matrix_path)?;
    let task_def = load_task(task.as_deref(), &mut ctx)?;
    let config = FitConfig {
        tol: flags.tol,
        max_iter: flags.max_iter,
        class_balance: flags.class_balance.or(task_def.class_balance),
    };
    let outcome = fit(&matrix, &config)?;
    if !quiet {
        eprintln!(
            "fit: {} iterations, converged={}, log-likelihood {:.4}, class balance {:.4}",
            outcome.iterations,
            outcome.converged,
            outcome.log_likelihood,
            outcome.params.class_balance
        );
        if !outcome.converged {
            eprintln!(
                "warning: did not converge within {} iterations (tol {})",
                config.max_iter, config.tol
            );
        }
    }
    let model = FittedModel::from_outcome(&outcome, &matrix, &config);
    model.save(&out)?;
    let config_echo = serde_json::to_value(&config).expect("config serializes");
    ctx.finish(
        serde_json::json!({"fit": config_echo, "task": task_def.name}),
        &out,
    )?;
    Ok(())
}

fn cmd_label(
    matrix_path: PathBuf,
    model_path: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("label", seed);
    verify_fresh(&matrix_path)?;
    verify_fresh(&model_path)?;
    // If the model's manifest recorded a matrix of the same name, the bytes
    // must still match: a regenerated matrix invalidates the model.
    if let Some(manifest) = RunManifest::load_beside(&model_path)? {
        if let Some(recorded) = manifest.input_hash_for(&matrix_path) {
            if recorded != sha256_file(&matrix_path)? {
                return Err(Error::StaleInput {
                    path: matrix_path.clone(),
                }
                .into());
            }
        }
    }
    ctx.record_input(&matrix_path)?;
    ctx.record_input(&model_path)?;

    let matrix = LabelMatrix::read_csv(&matrix_path)?;
    let model = FittedModel::load(&model_path)?;
    if model.heuristics != matrix.column_names() {
        return Err(CliError::Mismatch(format!(
            "model {} was fitted on different heuristics than matrix {}",
            model_path.display(),
            matrix_path.display()
        )));
    }
    let labels = predict(&model.params(), &matrix)?;
    write_prob_labels(&out, &labels)?;
    ctx.finish(serde_json::json!({}), &out)?;
    if !quiet {
        eprintln!(
            "labeled {} rows ({:.1}% abstained) -> {}",
            labels.len(),
            100.0 * abstain_rate(&labels),
            out.display()
        );
    }
    Ok(())
}

fn print_eval(report: &EvalReport) {
    println!("accuracy              {:.3}", report.accuracy);
    println!("macro F1              {:.3}", report.macro_f1);
    println!("precision (positive)  {:.3}", report.precision_positive);
    println!("recall (positive)     {:.3}", report.recall_positive);
    println!("precision (negative)  {:.3}", report.precision_negative);
    println!("recall (negative)     {:.3}", report.recall_negative);
    println!("abstain rate          {:.3}", report.abstain_rate);
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    labels: Option<PathBuf>,
    baseline: Option<String>,
    commits: Option<PathBuf>,
    baselines_dir: PathBuf,
    format: String,
    gold_path: PathBuf,
    task: Option<PathBuf>,
    fallback: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("eval", seed);
    ctx.record_input(&gold_path)?;
    let gold = GoldLabels::load(&gold_path)?;
    let task_def = load_task(task.as_deref(), &mut ctx)?;
    let fallback = resolve_fallback(fallback.as_deref(), &task_def)?;

    let report = match (&labels, &baseline) {
        (Some(labels_path), None) => {
            verify_fresh(labels_path)?;
            ctx.record_input(labels_path)?;
            let labels = read_prob_labels(labels_path)?;
            evaluate_prob_labels(&labels, &gold, fallback)?
        }
        (None, Some(name)) => {
            let commits = commits.ok_or_else(|| {
                CliError::Usage("--baseline requires --commits".to_string())
            })?;
            ctx.record_input(&commits)?;
            let kind = BaselineKind::from_str(name)?;
            let format = DatasetFormat::from_str(&format)?;
            let dataset = Dataset::load(&commits, None, format)?;
            ctx.dataset_name = Some(dataset.name.clone());
            let baseline = Baseline::load(kind, &baselines_dir)?;
            let predictions = baseline.classify(&dataset);
            evaluate_class_labels(&predictions, &gold)?
        }
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --labels or --baseline".to_string(),
            ))
        }
    };

    if !quiet {
        print_eval(&report);
    }
    if let Some(out) = out {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(&out, text).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
        ctx.finish(
            serde_json::json!({
                "task": task_def.name,
                "baseline": baseline,
            }),
            &out,
        )?;
    }
    Ok(())
}

fn cmd_diagnostics(
    matrix_path: PathBuf,
    gold: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("diagnostics", seed);
    verify_fresh(&matrix_path)?;
    ctx.record_input(&matrix_path)?;
    let matrix = LabelMatrix::read_csv(&matrix_path)?;
    let gold_labels = match &gold {
        Some(p) => {
            ctx.record_input(p)?;
            Some(GoldLabels::load(p)?)
        }
        None => None,
    };
    let diag = diagnostics(&matrix, gold_labels.as_ref())?;
    if !quiet {
        for d in &diag {
            let accuracy = d
                .empirical_accuracy
                .map(|a| format!("{a:.3}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "{:<28} coverage {:.3}  overlap {:.3}  conflict {:.3}  accuracy {}",
                d.name, d.coverage, d.overlap, d.conflict, accuracy
            );
        }
    }
    if let Some(out) = out {
        let mut text = serde_json::to_string_pretty(&diag).expect("diagnostics serialize");
        text.push('\n');
        std::fs::write(&out, text).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
        ctx.finish(serde_json::json!({}), &out)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    matrix_path: PathBuf,
    base_matrix: Option<PathBuf>,
    gold_path: PathBuf,
    task: Option<PathBuf>,
    flags: FitFlags,
    out: PathBuf,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("report", seed);
    verify_fresh(&matrix_path)?;
    ctx.record_input(&matrix_path)?;
    ctx.record_input(&gold_path)?;
    let gold = GoldLabels::load(&gold_path)?;
    let task_def = load_task(task.as_deref(), &mut ctx)?;
    let fallback = task_def.fallback();
    let config = FitConfig {
        tol: flags.tol,
        max_iter: flags.max_iter,
        class_balance: flags.class_balance.or(task_def.class_balance),
    };

    let head_matrix = LabelMatrix::read_csv(&matrix_path)?;
    let mut cache = FitCache::new();
    let head_params = cache.get_or_fit(&head_matrix, &config)?;
    let head_labels = predict(&head_params, &head_matrix)?;
    let head_eval = evaluate_prob_labels(&head_labels, &gold, fallback)?;
    let head_diag = diagnostics(&head_matrix, Some(&gold))?;

    let (base_eval, contributions) = match &base_matrix {
        Some(base_path) => {
            verify_fresh(base_path)?;
            ctx.record_input(base_path)?;
            let base = LabelMatrix::read_csv(base_path)?;
            let base_params = cache.get_or_fit(&base, &config)?;
            let base_labels = predict(&base_params, &base)?;
            let base_eval = evaluate_prob_labels(&base_labels, &gold, fallback)?;
            let base_names: HashSet<&String> = base.column_names().iter().collect();
            let new_names: Vec<String> = head_matrix
                .column_names()
                .iter()
                .filter(|n| !base_names.contains(n))
                .cloned()
                .collect();
            let contributions = loo_contributions(
                &head_matrix,
                &new_names,
                &gold,
                &config,
                fallback,
                &mut cache,
            )?;
            (Some(base_eval), contributions)
        }
        None => (None, Vec::new()),
    };

    let data = ReportData::new(head_diag, head_eval, base_eval, contributions);
    let markdown = render_report(&data);
    std::fs::write(&out, &markdown).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let json_out = out.with_extension("json");
    if json_out == out {
        return Err(CliError::Usage(
            "--out must not end in .json (the JSON twin is written beside it)".to_string(),
        ));
    }
    let mut text = serde_json::to_string_pretty(&data).expect("report data serializes");
    text.push('\n');
    std::fs::write(&json_out, text).map_err(|e| Error::Io {
        path: json_out.clone(),
        source: e,
    })?;

    let config_echo = serde_json::to_value(&config).expect("config serializes");
    ctx.finish(
        serde_json::json!({
            "task": task_def.name,
            "fit": config_echo,
            "json_out": json_out.display().to_string(),
        }),
        &out,
    )?;
    if !quiet {
        eprintln!("report -> {} (+ {})", out.display(), json_out.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_export(
    labels_path: PathBuf,
    commits: PathBuf,
    format: String,
    task: Option<PathBuf>,
    mode: String,
    include_meta: bool,
    out: PathBuf,
    seed: Option<u64>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("export", seed);
    verify_fresh(&labels_path)?;
    ctx.record_input(&labels_path)?;
    ctx.record_input(&commits)?;
    let format = DatasetFormat::from_str(&format)?;
    let mode = ExportMode::from_str(&mode)?;
    let dataset = Dataset::load(&commits, None, format)?;
    ctx.dataset_name = Some(dataset.name.clone());
    let labels = read_prob_labels(&labels_path)?;
    let task_def = load_task(task.as_deref(), &mut ctx)?;

    let file = std::fs::File::create(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let mut writer = std::io::BufWriter::new(file);
    let summary = export(
        &task_def,
        &labels,
        &dataset,
        ExportOptions {
            mode,
            include_metadata: include_meta,
        },
        &mut writer,
    )?;
    writer.flush().map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;

    ctx.finish(
        serde_json::json!({
            "task": task_def.name,
            "mode": mode.to_string(),
            "include_meta": include_meta,
            "summary": summary,
        }),
        &out,
    )?;
    if !quiet {
        eprintln!(
            "exported {} rows ({} abstained dropped, {} fallback-labeled) -> {}",
            summary.written,
            summary.dropped_abstained,
            summary.fallback_labeled,
            out.display()
        );
    }
    Ok(())
}

fn cmd_validate(
    commits: PathBuf,
    issues: Option<PathBuf>,
    link_policy: String,
    format: String,
    out: Option<PathBuf>,
    quiet: bool,
) -> CliResult<()> {
    let mut ctx = RunContext::new("validate", None);
    let format = DatasetFormat::from_str(&format)?;
    ctx.record_input(&commits)?;
    if let Some(p) = &issues {
        ctx.record_input(p)?;
    }
    let mut dataset = Dataset::load(&commits, issues.as_deref(), format)?;
    if issues.is_some() {
        let policy = LinkPolicy::from_str(&link_policy)?;
        dataset = link(&dataset, policy)?;
    }
    let report = validate(&dataset);
    let value = serde_json::json!({
        "validation": report,
        "provenance": dataset.provenance,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
    text.push('\n');
    match out {
        Some(out) => {
            std::fs::write(&out, text).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            ctx.finish(serde_json::json!({}), &out)?;
            if !quiet {
                eprintln!("validation report -> {}", out.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}
