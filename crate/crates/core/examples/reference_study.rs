//! Replays the reference study through scripted clients and prints the analysis report.
//!
//! ```bash
//! cargo run --example reference_study
//! cargo run --example reference_study -- --export /tmp/stalectx-ref
//! ```
//!
//! With `--export DIR` the evaluation samples, the gate rows and both mock scripts are
//! written to `DIR` so the same study can be replayed through the `stalectx` binary.

use std::path::PathBuf;

use stalectx::analysis::{analyze, render_report};
use stalectx::client::{ModelConfig, ScriptedMock};
use stalectx::harness::{run_experiment, RunOptions};
use stalectx::jsonl;
use stalectx::reference::{curated_samples, evaluation_samples, gate_rows, script_for, GPT, QWEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let export = match args.next().as_deref() {
        Some("--export") => Some(PathBuf::from(args.next().ok_or("--export needs a directory")?)),
        Some(other) => return Err(format!("unknown argument {other}").into()),
        None => None,
    };

    let (samples, excluded) = evaluation_samples();
    eprintln!("{} evaluation samples, {} excluded by the gate", samples.len(), excluded.len());

    let work = tempfile::tempdir()?;
    let mut logs = Vec::new();
    for model in [QWEN, GPT] {
        let client = ScriptedMock::from_script(script_for(model, &samples));
        let options = RunOptions::new(model, ModelConfig::new(model, "scripted"));
        logs.push(run_experiment(&samples, &client, &work.path().join(model), &options)?);
    }
    print!("{}", render_report(&analyze(&logs, false)?)?);

    if let Some(dir) = export {
        std::fs::create_dir_all(&dir)?;
        let curated = curated_samples();
        jsonl::write(&dir.join("curated.jsonl"), &curated)?;
        jsonl::write(&dir.join("gate_results.jsonl"), &gate_rows(&curated))?;
        jsonl::write(&dir.join("samples.jsonl"), &samples)?;
        for (model, file) in [(QWEN, "qwen_script.json"), (GPT, "gpt_script.json")] {
            let script = script_for(model, &samples);
            std::fs::write(dir.join(file), serde_json::to_string_pretty(&script)?)?;
        }
        eprintln!("reference inputs written to {}", dir.display());
    }
    Ok(())
}
