//! Grid orchestration: render, audit, call, classify, and log every (sample, condition) cell.
//!
//! Output directory layout:
//!
//! ```text
//! manifest.json     run configuration, written before the first model call
//! results.jsonl     one CompletionRecord per cell, appended in (sample_id, condition) order
//! audit.jsonl       one audit row per rendered prompt
//! prompts/          system.txt, one <sample_id>__<condition>.txt per user prompt,
//!                   rendered.jsonl (prompts with field segments) and
//!                   context_ids.jsonl (oracle-only id mapping)
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{Finding, Lexicon};
use crate::builder::DiagnosticSample;
use crate::callsite::PatternError;
use crate::client::{ClientError, CompletionClient, ModelConfig};
use crate::condition::RetrievalCondition;
use crate::oracle::{CompletionRecord, SampleOracle};
use crate::prompt::{assign_context_ids, render_prompt_with, MetadataPolicy, PromptField, RenderedPrompt};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.jsonl";
pub const AUDIT_FILE: &str = "audit.jsonl";
pub const AUDIT_SUMMARY_FILE: &str = "audit_summary.json";
pub const PROMPTS_DIR: &str = "prompts";
/// Inside the prompts directory: full rendered prompts with field segments, for re-auditing.
pub const RENDERED_FILE: &str = "rendered.jsonl";
pub const CONTEXT_IDS_FILE: &str = "context_ids.jsonl";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("prompt for {sample_id} / {condition} failed audit with {violations} violation(s); run refused")]
    AuditRefusal {
        sample_id: String,
        condition: RetrievalCondition,
        violations: usize,
    },
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("{0} already holds results; pass resume to continue it")]
    OutputExists(PathBuf),
    #[error("cannot resume: {0}")]
    ManifestMismatch(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub dataset_path: Option<String>,
    pub model_config: ModelConfig,
    pub conditions: Vec<RetrievalCondition>,
    pub metadata_policy: MetadataPolicy,
    pub sample_count: usize,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub harness_version: String,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub run_id: String,
    pub dataset_path: Option<String>,
    pub model_config: ModelConfig,
    pub conditions: Vec<RetrievalCondition>,
    pub metadata_policy: MetadataPolicy,
    pub lexicon: Lexicon,
    pub resume: bool,
}

impl RunOptions {
    pub fn new(run_id: impl Into<String>, model_config: ModelConfig) -> Self {
        RunOptions {
            run_id: run_id.into(),
            dataset_path: None,
            model_config,
            conditions: RetrievalCondition::ALL.to_vec(),
            metadata_policy: MetadataPolicy::Hidden,
            lexicon: Lexicon::default(),
            resume: false,
        }
    }
}

/// Render every cell in (sample_id, condition) order.
pub fn render_grid(
    samples: &[DiagnosticSample],
    conditions: &[RetrievalCondition],
    policy: MetadataPolicy,
    lexicon: &Lexicon,
) -> Vec<(usize, RenderedPrompt)> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].sample_id.cmp(&samples[b].sample_id));
    let mut conditions = conditions.to_vec();
    conditions.sort();
    conditions.dedup();

    let mut out = Vec::with_capacity(samples.len() * conditions.len());
    for i in order {
        let ids = assign_context_ids(&samples[i].sample_id);
        for &c in &conditions {
            out.push((i, render_prompt_with(&samples[i], c, policy, lexicon, &ids)));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub sample_id: String,
    pub condition: RetrievalCondition,
    pub clean: bool,
    pub violations: Vec<Finding>,
    pub advisories: Vec<Finding>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub prompts: usize,
    pub clean_prompts: usize,
    pub violations: usize,
    pub advisories: usize,
    pub violations_by_field: BTreeMap<PromptField, usize>,
}

impl AuditSummary {
    fn add(&mut self, prompt: &RenderedPrompt) {
        self.prompts += 1;
        self.clean_prompts += usize::from(prompt.audit.clean);
        self.violations += prompt.audit.violations.len();
        self.advisories += prompt.audit.advisories.len();
        for v in &prompt.audit.violations {
            *self.violations_by_field.entry(v.field_name).or_default() += 1;
        }
    }
}

fn write_json_lines<'a, T: Serialize + 'a>(
    path: &Path,
    rows: impl IntoIterator<Item = &'a T>,
) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_prompt_files(
    samples: &[DiagnosticSample],
    grid: &[(usize, RenderedPrompt)],
    out_dir: &Path,
) -> Result<AuditSummary, HarnessError> {
    let prompts_dir = out_dir.join(PROMPTS_DIR);
    fs::create_dir_all(&prompts_dir).map_err(io_err(&prompts_dir))?;

    let mut summary = AuditSummary::default();
    let mut audit_rows = Vec::with_capacity(grid.len());
    let mut seen = HashSet::new();
    let mut id_rows = Vec::new();
    for (i, prompt) in grid {
        let path = prompts_dir.join(format!("{}.txt", prompt.file_stem()));
        fs::write(&path, &prompt.user_text).map_err(io_err(&path))?;
        summary.add(prompt);
        audit_rows.push(AuditRow {
            sample_id: prompt.sample_id.clone(),
            condition: prompt.condition,
            clean: prompt.audit.clean,
            violations: prompt.audit.violations.clone(),
            advisories: prompt.audit.advisories.clone(),
        });
        if seen.insert(*i) {
            id_rows.push(assign_context_ids(&samples[*i].sample_id));
        }
    }
    if let Some((_, first)) = grid.first() {
        let path = prompts_dir.join("system.txt");
        fs::write(&path, &first.system_text).map_err(io_err(&path))?;
    }
    write_json_lines(&prompts_dir.join(CONTEXT_IDS_FILE), &id_rows)?;
    write_json_lines(&prompts_dir.join(RENDERED_FILE), grid.iter().map(|(_, p)| p))?;
    write_json_lines(&out_dir.join(AUDIT_FILE), &audit_rows)?;
    write_json_pretty(&out_dir.join(AUDIT_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Write every rendered prompt and the audit results without calling any model.
pub fn dump_prompts(
    samples: &[DiagnosticSample],
    conditions: &[RetrievalCondition],
    policy: MetadataPolicy,
    lexicon: &Lexicon,
    out_dir: &Path,
) -> Result<AuditSummary, HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let grid = render_grid(samples, conditions, policy, lexicon);
    write_prompt_files(samples, &grid, out_dir)
}

/// Read a results log, dropping a trailing partial line left by a crash.
///
/// Returns the parsed rows and the byte length of the intact prefix.
pub fn read_results(path: &Path) -> Result<(Vec<CompletionRecord>, u64), HarnessError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut rows = Vec::new();
    let mut intact = 0usize;
    for line in text.split_inclusive('\n') {
        if !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<CompletionRecord>(line) {
            Ok(r) => rows.push(r),
            Err(_) if intact + line.len() == text.len() => break,
            Err(source) => {
                return Err(HarnessError::Json {
                    path: path.to_path_buf(),
                    source,
                })
            }
        }
        intact += line.len();
    }
    Ok((rows, intact as u64))
}

fn error_record(
    sample: &DiagnosticSample,
    prompt: &RenderedPrompt,
    model_name: &str,
    err: &ClientError,
) -> CompletionRecord {
    CompletionRecord {
        sample_id: sample.sample_id.clone(),
        condition: prompt.condition,
        model_name: model_name.to_string(),
        repo_name: sample.repo_name.clone(),
        raw_output: String::new(),
        normalized_output: String::new(),
        matched_current: false,
        matched_stale: false,
        classification: None,
        taxonomy_label: None,
        request_fingerprint: None,
        error: Some(err.to_string()),
    }
}

fn prepare_manifest(
    samples: &[DiagnosticSample],
    client_model: &str,
    options: &RunOptions,
    out_dir: &Path,
) -> Result<RunManifest, HarnessError> {
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let results_path = out_dir.join(RESULTS_FILE);
    let has_results = fs::metadata(&results_path).map(|m| m.len() > 0).unwrap_or(false);

    if options.resume && manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let mut prior: RunManifest = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: manifest_path.clone(),
            source,
        })?;
        if prior.model_config.model_name != client_model {
            return Err(HarnessError::ManifestMismatch(format!(
                "log belongs to model {}, client is {client_model}",
                prior.model_config.model_name
            )));
        }
        prior.finished_at = None;
        return Ok(prior);
    }
    if has_results && !options.resume {
        return Err(HarnessError::OutputExists(results_path));
    }
    let mut conditions = options.conditions.clone();
    conditions.sort();
    conditions.dedup();
    let mut model_config = options.model_config.clone();
    model_config.model_name = client_model.to_string();
    Ok(RunManifest {
        run_id: options.run_id.clone(),
        dataset_path: options.dataset_path.clone(),
        model_config,
        conditions,
        metadata_policy: options.metadata_policy,
        sample_count: samples.len(),
        started_at: Utc::now(),
        finished_at: None,
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Run every (sample, condition) cell through `client` and log the classified results.
///
/// The whole run is refused before any model call if a prompt fails audit. With
/// `options.resume`, cells already present in `results.jsonl` are skipped and a partial
/// trailing line is discarded. Client failures are logged per cell with no classification.
/// Returns every row in the log, sorted by cell.
pub fn run_experiment(
    samples: &[DiagnosticSample],
    client: &dyn CompletionClient,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<Vec<CompletionRecord>, HarnessError> {
    let grid = render_grid(samples, &options.conditions, options.metadata_policy, &options.lexicon);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_prompt_files(samples, &grid, out_dir)?;
    if let Some((_, bad)) = grid.iter().find(|(_, p)| !p.audit.clean) {
        return Err(HarnessError::AuditRefusal {
            sample_id: bad.sample_id.clone(),
            condition: bad.condition,
            violations: bad.audit.violations.len(),
        });
    }

    let mut manifest = prepare_manifest(samples, client.model_name(), options, out_dir)?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    write_json_pretty(&manifest_path, &manifest)?;

    let results_path = out_dir.join(RESULTS_FILE);
    let (mut rows, intact) = if options.resume {
        read_results(&results_path)?
    } else {
        (Vec::new(), 0)
    };
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(false)
        .open(&results_path)
        .map_err(io_err(&results_path))?;
    file.set_len(intact).map_err(io_err(&results_path))?;
    let mut log = OpenOptions::new()
        .append(true)
        .open(&results_path)
        .map_err(io_err(&results_path))?;

    let done: HashSet<(String, RetrievalCondition)> =
        rows.iter().map(|r| (r.sample_id.clone(), r.condition)).collect();
    let mut oracles: BTreeMap<usize, SampleOracle> = BTreeMap::new();

    for (i, prompt) in &grid {
        if done.contains(&(prompt.sample_id.clone(), prompt.condition)) {
            continue;
        }
        let sample = &samples[*i];
        let record = match client.complete(prompt) {
            Ok(raw) => {
                if !oracles.contains_key(i) {
                    oracles.insert(*i, SampleOracle::new(sample)?);
                }
                let mut r = oracles[i].record(prompt.condition, &raw.model_name, &sample.repo_name, &raw.output_text);
                r.request_fingerprint = Some(raw.request_fingerprint);
                r
            }
            Err(e) => error_record(sample, prompt, client.model_name(), &e),
        };
        let line = serde_json::to_string(&record).map_err(|source| HarnessError::Json {
            path: results_path.clone(),
            source,
        })?;
        log.write_all(format!("{line}\n").as_bytes())
            .and_then(|_| log.flush())
            .map_err(io_err(&results_path))?;
        rows.push(record);
    }

    manifest.finished_at = Some(Utc::now());
    write_json_pretty(&manifest_path, &manifest)?;
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(rows)
}

/// Load rendered prompts written by [`dump_prompts`] or [`run_experiment`].
pub fn load_rendered(prompts_dir: &Path) -> Result<Vec<RenderedPrompt>, HarnessError> {
    let path = prompts_dir.join(RENDERED_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| HarnessError::Json {
                path: path.clone(),
                source,
            })
        })
        .collect()
}

/// Load result rows from a JSONL log, ignoring a trailing partial line.
pub fn load_results(path: &Path) -> Result<Vec<CompletionRecord>, HarnessError> {
    read_results(path).map(|(rows, _)| rows)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::builder::build_sample;
    use crate::builder::tests::change;
    use crate::client::scripted_mock;
    use crate::oracle::Outcome;

    fn samples() -> Vec<DiagnosticSample> {
        vec![
            build_sample(&change("_nullpager", &["stream", "generator", "color"], &["stream", "color"]), 1).unwrap(),
            build_sample(&change("chop_cells", &["text", "width"], &["text", "width", "overflow"]), 2).unwrap(),
        ]
    }

    fn options() -> RunOptions {
        RunOptions::new("unit", ModelConfig::new("mock", "scripted:"))
    }

    #[test]
    fn grid_is_sorted_and_complete() {
        let mut s = samples();
        s.reverse();
        let grid = render_grid(&s, &RetrievalCondition::ALL, MetadataPolicy::Hidden, &Lexicon::default());
        assert_eq!(grid.len(), 10);
        let keys: Vec<_> = grid.iter().map(|(_, p)| (p.sample_id.clone(), p.condition)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn run_logs_every_cell() {
        let dir = tempfile::tempdir().unwrap();
        let s = samples();
        let mut table = HashMap::new();
        for x in &s {
            table.insert((x.sample_id.clone(), RetrievalCondition::StaleContextOnly), x.canonical_stale_call());
        }
        let mock = scripted_mock("mock", table, Some("pass".into()));
        let rows = run_experiment(&s, &mock, dir.path(), &options()).unwrap();
        assert_eq!(rows.len(), 10);
        let stale: Vec<_> = rows.iter().filter(|r| r.classification == Some(Outcome::StaleReference)).collect();
        assert_eq!(stale.len(), 2);
        assert!(stale.iter().all(|r| r.condition == RetrievalCondition::StaleContextOnly));
        assert_eq!(load_results(&dir.path().join(RESULTS_FILE)).unwrap(), rows);
        let manifest: RunManifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert!(manifest.finished_at.is_some());
        assert_eq!(fs::read_dir(dir.path().join(PROMPTS_DIR)).unwrap().count(), 13);
    }

    #[test]
    fn client_errors_are_logged_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mock = scripted_mock("mock", HashMap::new(), None);
        let rows = run_experiment(&samples(), &mock, dir.path(), &options()).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.is_error() && r.classification.is_none()));
    }

    #[test]
    fn unclean_prompt_refuses_whole_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = samples();
        s[1].task_prompt.push_str(" Prefer the latest version.");
        let mock = scripted_mock("mock", HashMap::new(), Some("pass".into()));
        let err = run_experiment(&s, &mock, dir.path(), &options()).unwrap_err();
        assert!(matches!(err, HarnessError::AuditRefusal { .. }));
        assert!(!dir.path().join(RESULTS_FILE).exists());
        assert!(!dir.path().join(MANIFEST_FILE).exists());
        assert!(dir.path().join(AUDIT_FILE).exists());
    }

    #[test]
    fn existing_log_needs_resume() {
        let dir = tempfile::tempdir().unwrap();
        let mock = scripted_mock("mock", HashMap::new(), Some("pass".into()));
        run_experiment(&samples(), &mock, dir.path(), &options()).unwrap();
        let err = run_experiment(&samples(), &mock, dir.path(), &options()).unwrap_err();
        assert!(matches!(err, HarnessError::OutputExists(_)));
    }

    #[test]
    fn partial_trailing_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let mock = scripted_mock("mock", HashMap::new(), Some("pass".into()));
        let full = run_experiment(&samples(), &mock, dir.path(), &options()).unwrap();
        let path = dir.path().join(RESULTS_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let cut: usize = text.split_inclusive('\n').take(3).map(str::len).sum();
        fs::write(&path, format!("{}{{\"sample_id\":\"stale-re", &text[..cut])).unwrap();

        let (rows, intact) = read_results(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(intact as usize, cut);

        let opts = RunOptions { resume: true, ..options() };
        let resumed = run_experiment(&samples(), &mock, dir.path(), &opts).unwrap();
        assert_eq!(resumed, full);
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn empty_grid_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let mock = scripted_mock("mock", HashMap::new(), None);
        let rows = run_experiment(&[], &mock, dir.path(), &options()).unwrap();
        assert!(rows.is_empty());
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert_eq!(fs::read_to_string(dir.path().join(RESULTS_FILE)).unwrap(), "");
    }

    #[test]
    fn poisoned_task_is_attributed_in_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = samples();
        s[0].task_prompt.push_str(" Avoid the old commit.");
        let summary = dump_prompts(
            &s,
            &[RetrievalCondition::NoRetrieval],
            MetadataPolicy::Hidden,
            &Lexicon::default(),
            dir.path(),
        )
        .unwrap();
        assert_eq!(summary.prompts, 2);
        assert_eq!(summary.violations, 1);
        assert_eq!(summary.violations_by_field.get(&PromptField::TaskPrompt), Some(&1));
        assert_eq!(summary.violations_by_field.len(), 1);
    }
}
