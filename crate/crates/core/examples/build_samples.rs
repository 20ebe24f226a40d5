//! Turns mined signature changes into wrapper-completion samples and applies the quality gate.
//!
//! ```bash
//! cargo run --example build_samples
//! ```

use stalectx::builder::{build_dataset, build_sample, quality_gate};
use stalectx::reference::{curated_changes, gate_rows};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let changes: Vec<_> = curated_changes().into_iter().map(|(_, c)| c).collect();
    let (samples, skipped) = build_dataset(&changes);
    println!("{} samples built, {} skipped", samples.len(), skipped.len());

    let first = &samples[0];
    println!("\n{} ({}:{})", first.sample_id, first.repo_name, first.helper_name());
    println!("--- local context ---\n{}", first.local_context.prefix);
    println!("--- current snippet ---\n{}", first.current_snippet);
    println!("--- stale snippet ---\n{}", first.stale_snippet);

    // The reference gate rows are keyed by the curated sequence numbers.
    let curated = curated_changes()
        .iter()
        .map(|(seq, c)| build_sample(c, *seq))
        .collect::<Result<Vec<_>, _>>()?;
    let (kept, decisions) = quality_gate(&curated, &gate_rows(&curated))?;
    println!("gate kept {} of {}", kept.len(), curated.len());
    for d in decisions.iter().filter(|d| !d.retained) {
        println!("  dropped {} ({})", d.sample_id, d.gate_classification);
    }
    Ok(())
}
