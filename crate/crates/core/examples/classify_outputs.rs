//! Classifies raw model outputs against a sample's current and stale call patterns.
//!
//! ```bash
//! cargo run --example classify_outputs
//! ```

use stalectx::oracle::SampleOracle;
use stalectx::reference::{curated_samples, render_output, Shape, GPT, QWEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample = curated_samples()
        .into_iter()
        .find(|s| s.helper_name() == "_tempfilepager")
        .ok_or("reference set lost _tempfilepager")?;
    let oracle = SampleOracle::new(&sample)?;
    println!("sample  {}", sample.sample_id);
    println!("current {}", sample.canonical_current_call());
    println!("stale   {}\n", sample.canonical_stale_call());

    let shapes = [
        Shape::CurrentCall,
        Shape::StaleCall,
        Shape::StaleReconstruction,
        Shape::ReceiverCall,
        Shape::NoCall,
    ];
    for (shape, model) in shapes.iter().flat_map(|s| [(*s, QWEN), (*s, GPT)]) {
        let raw = render_output(&sample, shape, model);
        let row = oracle.record(stalectx::condition::RetrievalCondition::StaleContextOnly, model, &sample.repo_name, &raw);
        println!(
            "{:<20} {:<28} {:<22} {}",
            format!("{shape:?}"),
            model,
            row.classification.map_or("error".into(), |c| c.to_string()),
            row.taxonomy_label.map_or(String::new(), |l| l.title().to_string()),
        );
    }

    let handwritten = "```python\ndef invoke_target(generator, cmd, color):\n    return _tempfilepager(generator,\n        cmd, color)\n```";
    println!("\nmulti-line call: {}", oracle.classify(handwritten).value);
    Ok(())
}
