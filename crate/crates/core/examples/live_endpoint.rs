//! Runs the reference samples against a live OpenAI-compatible chat-completions endpoint.
//!
//! ```bash
//! STALECTX_ENDPOINT=http://localhost:8000/v1 STALECTX_MODEL=my-model \
//!     cargo run --example live_endpoint -- /tmp/live-run
//! ```
//!
//! Set `STALECTX_API_KEY_ENV` to the name of a variable holding a bearer token if the
//! endpoint needs one. Runs resume when the output directory already holds a log.

use std::path::PathBuf;

use stalectx::analysis::{analyze, render_report};
use stalectx::client::{HttpClient, ModelConfig};
use stalectx::harness::{run_experiment, RunOptions};
use stalectx::reference::evaluation_samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (Ok(endpoint), Ok(model)) = (std::env::var("STALECTX_ENDPOINT"), std::env::var("STALECTX_MODEL")) else {
        eprintln!("set STALECTX_ENDPOINT and STALECTX_MODEL to run against a live endpoint");
        return Ok(());
    };
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "live-run".into()));
    let config = ModelConfig {
        api_key_env: std::env::var("STALECTX_API_KEY_ENV").ok(),
        request_delay_ms: 250,
        ..ModelConfig::new(model.clone(), endpoint)
    };
    let client = HttpClient::new(config.clone())?;
    let (samples, _) = evaluation_samples();
    let options = RunOptions {
        resume: out.join(stalectx::harness::RESULTS_FILE).exists(),
        ..RunOptions::new(format!("live-{model}"), config)
    };
    let rows = run_experiment(&samples, &client, &out, &options)?;
    let errors = rows.iter().filter(|r| r.is_error()).count();
    eprintln!("{} rows, {errors} errored", rows.len());
    print!("{}", render_report(&analyze(&[rows], errors > 0)?)?);
    Ok(())
}
