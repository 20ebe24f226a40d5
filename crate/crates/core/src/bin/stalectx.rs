use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stalectx::analysis::{analyze, render_report};
use stalectx::audit::{audit_prompt, Lexicon, DEFAULT_HASH_PATTERN};
use stalectx::builder::{build_dataset, check_unique_ids, quality_gate, DiagnosticSample};
use stalectx::client::{CompletionClient, HttpClient, ModelConfig, ScriptedMock};
use stalectx::condition::RetrievalCondition;
use stalectx::harness::{self, dump_prompts, load_rendered, load_results, run_experiment, AuditRow, RunOptions};
use stalectx::jsonl;
use stalectx::miner::{scan_history, FilterConfig, SignatureChange, DEFAULT_COMMIT_LIMIT};
use stalectx::oracle::CompletionRecord;
use stalectx::prompt::MetadataPolicy;

/// Measure how stale retrieved repository context steers code completion.
#[derive(Parser)]
#[command(name = "stalectx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine helper signature changes from first-parent git history.
    Mine {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long, default_value_t = DEFAULT_COMMIT_LIMIT)]
        limit: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        reject_log: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        max_arity: usize,
        #[arg(long, default_value_t = 50)]
        dedupe_window: usize,
    },
    /// Build diagnostic samples from mined candidates, optionally applying a quality gate.
    Curate {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to keep the pre-gate sample set.
        #[arg(long)]
        pregate_out: Option<PathBuf>,
        /// File of sample ids to keep, one per line, applied before the gate.
        #[arg(long)]
        allowlist: Option<PathBuf>,
        /// Gate model results under current_context_only; without it no gate is applied.
        #[arg(long)]
        gate_results: Option<PathBuf>,
    },
    /// Render every prompt and audit it without calling a model.
    Render {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "hidden")]
        context_metadata: MetadataPolicy,
        #[arg(long, default_value = "all")]
        conditions: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Re-audit rendered prompts against a lexicon.
    Audit {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the condition grid against an endpoint or a mock script.
    Run {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        api_key_env: Option<String>,
        #[arg(long, default_value_t = 0)]
        request_delay_ms: u64,
        #[arg(long, default_value_t = 120_000)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 3)]
        max_retries: u32,
        #[arg(long, default_value = "all")]
        conditions: String,
        #[arg(long, default_value = "hidden")]
        context_metadata: MetadataPolicy,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        run_id: Option<String>,
        #[arg(long)]
        mock_script: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        resume: bool,
    },
    /// Compute metrics and statistics from one or two result logs.
    Analyze {
        #[arg(long, num_args = 1..=2, required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        allow_partial: bool,
    },
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        None => Ok(Lexicon::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Lexicon::parse(&text, DEFAULT_HASH_PATTERN)?)
        }
    }
}

fn load_samples(path: &Path) -> Result<Vec<DiagnosticSample>> {
    let samples: Vec<DiagnosticSample> = jsonl::read(path).with_context(|| format!("reading {}", path.display()))?;
    check_unique_ids(&samples)?;
    Ok(samples)
}

fn mine(
    repo: &Path,
    limit: usize,
    out: &Path,
    reject_log: Option<&Path>,
    max_arity: usize,
    dedupe_window: usize,
) -> Result<()> {
    let filters = FilterConfig {
        max_arity,
        dedupe_window,
        ..FilterConfig::default()
    };
    let result = scan_history(repo, limit, &filters)?;
    jsonl::write(out, &result.retained)?;
    if let Some(path) = reject_log {
        jsonl::write(path, &result.rejected)?;
    }
    eprintln!(
        "{} candidates retained, {} rejected",
        result.retained.len(),
        result.rejected.len()
    );
    Ok(())
}

fn curate(
    candidates: &Path,
    out: &Path,
    pregate_out: Option<&Path>,
    allowlist: Option<&Path>,
    gate_results: Option<&Path>,
) -> Result<()> {
    let changes: Vec<SignatureChange> = jsonl::read(candidates)?;
    let (mut samples, skipped) = build_dataset(&changes);
    for (c, e) in &skipped {
        eprintln!("skipped {} in {}: {e}", c.function_name, c.file_path);
    }
    if let Some(path) = allowlist {
        let keep: HashSet<String> = std::fs::read_to_string(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        samples.retain(|s| keep.contains(&s.sample_id) || keep.contains(s.short_id()));
    }
    if let Some(path) = pregate_out {
        jsonl::write(path, &samples)?;
    }
    let retained = match gate_results {
        Some(path) => {
            let rows: Vec<CompletionRecord> = load_results(path)?;
            let (kept, excluded) = quality_gate(&samples, &rows)?;
            for d in &excluded {
                eprintln!("gate excluded {} ({})", d.sample_id, d.gate_classification);
            }
            kept
        }
        None => samples,
    };
    jsonl::write(out, &retained)?;
    eprintln!("{} samples written to {}", retained.len(), out.display());
    Ok(())
}

fn render(
    samples: &Path,
    out: &Path,
    policy: MetadataPolicy,
    conditions: &str,
    lexicon: Option<&Path>,
) -> Result<bool> {
    let samples = load_samples(samples)?;
    let conditions = RetrievalCondition::parse_list(conditions)?;
    let summary = dump_prompts(&samples, &conditions, policy, &load_lexicon(lexicon)?, out)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(summary.violations == 0)
}

fn audit(prompts: &Path, lexicon: Option<&Path>, report: &Path) -> Result<bool> {
    let lexicon = load_lexicon(lexicon)?;
    let rendered = load_rendered(prompts)?;
    let rows: Vec<AuditRow> = rendered
        .iter()
        .map(|p| {
            let r = audit_prompt(p, &lexicon);
            AuditRow {
                sample_id: p.sample_id.clone(),
                condition: p.condition,
                clean: r.clean,
                violations: r.violations,
                advisories: r.advisories,
            }
        })
        .collect();
    jsonl::write(report, &rows)?;
    let unclean = rows.iter().filter(|r| !r.clean).count();
    println!("{} prompts audited, {unclean} unclean", rows.len());
    Ok(unclean == 0)
}

#[allow(clippy::too_many_arguments)]
fn run(
    samples_path: &Path,
    model: Option<String>,
    endpoint: Option<String>,
    api_key_env: Option<String>,
    request_delay_ms: u64,
    timeout_ms: u64,
    max_retries: u32,
    conditions: &str,
    policy: MetadataPolicy,
    out: &Path,
    run_id: Option<String>,
    mock_script: Option<&Path>,
    lexicon: Option<&Path>,
    resume: bool,
) -> Result<bool> {
    let samples = load_samples(samples_path)?;
    let (client, config): (Box<dyn CompletionClient>, ModelConfig) = match (mock_script, &endpoint) {
        (Some(script), _) => {
            let mock = ScriptedMock::load(script)?;
            let config = ModelConfig::new(mock.model_name(), format!("scripted:{}", script.display()));
            (Box::new(mock), config)
        }
        (None, Some(url)) => {
            let Some(model) = model else {
                bail!("--model is required with --endpoint");
            };
            let config = ModelConfig {
                api_key_env,
                request_delay_ms,
                timeout_ms,
                max_retries,
                ..ModelConfig::new(model, url.clone())
            };
            (Box::new(HttpClient::new(config.clone())?), config)
        }
        (None, None) => bail!("either --endpoint or --mock-script is required"),
    };
    let run_id = run_id.unwrap_or_else(|| {
        out.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    });
    let options = RunOptions {
        dataset_path: Some(samples_path.display().to_string()),
        conditions: RetrievalCondition::parse_list(conditions)?,
        metadata_policy: policy,
        lexicon: load_lexicon(lexicon)?,
        resume,
        ..RunOptions::new(run_id, config)
    };
    let rows = run_experiment(&samples, client.as_ref(), out, &options)?;
    let errors = rows.iter().filter(|r| r.is_error()).count();
    eprintln!(
        "{} rows in {}, {errors} errored",
        rows.len(),
        out.join(harness::RESULTS_FILE).display()
    );
    Ok(errors == 0)
}

fn analyze_cmd(runs: &[PathBuf], report: &Path, allow_partial: bool) -> Result<()> {
    let logs = runs
        .iter()
        .map(|p| load_results(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let analysis = analyze(&logs, allow_partial)?;
    let text = render_report(&analysis)?;
    if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(report, &text)?;
    for run in &analysis.runs {
        if let Some(d) = run.delta(stalectx::analysis::PRIMARY) {
            println!("{}: primary delta {d}", run.model_name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Mine {
            repo,
            limit,
            out,
            reject_log,
            max_arity,
            dedupe_window,
        } => mine(&repo, limit, &out, reject_log.as_deref(), max_arity, dedupe_window).map(|_| true),
        Command::Curate {
            candidates,
            out,
            pregate_out,
            allowlist,
            gate_results,
        } => curate(
            &candidates,
            &out,
            pregate_out.as_deref(),
            allowlist.as_deref(),
            gate_results.as_deref(),
        )
        .map(|_| true),
        Command::Render {
            samples,
            out,
            context_metadata,
            conditions,
            lexicon,
        } => render(&samples, &out, context_metadata, &conditions, lexicon.as_deref()),
        Command::Audit {
            prompts,
            lexicon,
            report,
        } => audit(&prompts, lexicon.as_deref(), &report),
        Command::Run {
            samples,
            model,
            endpoint,
            api_key_env,
            request_delay_ms,
            timeout_ms,
            max_retries,
            conditions,
            context_metadata,
            out,
            run_id,
            mock_script,
            lexicon,
            resume,
        } => run(
            &samples,
            model,
            endpoint,
            api_key_env,
            request_delay_ms,
            timeout_ms,
            max_retries,
            &conditions,
            context_metadata,
            &out,
            run_id,
            mock_script.as_deref(),
            lexicon.as_deref(),
            resume,
        ),
        Command::Analyze {
            runs,
            report,
            allow_partial,
        } => analyze_cmd(&runs, &report, allow_partial).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
