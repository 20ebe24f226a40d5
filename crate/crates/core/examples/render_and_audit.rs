//! Renders one sample under every retrieval condition and audits the prompts for leakage.
//!
//! ```bash
//! cargo run --example render_and_audit
//! ```

use stalectx::audit::{audit_prompt, Lexicon};
use stalectx::condition::RetrievalCondition;
use stalectx::prompt::{render_prompt, MetadataPolicy};
use stalectx::reference::curated_samples;

fn main() {
    let sample = &curated_samples()[0];
    for condition in RetrievalCondition::ALL {
        let prompt = render_prompt(sample, condition, MetadataPolicy::Hidden);
        println!(
            "{condition:<32} {} context block(s), clean = {}",
            prompt.context_blocks.len(),
            prompt.audit.clean
        );
    }

    let prompt = render_prompt(sample, RetrievalCondition::MixedStaleTop1CurrentTop2, MetadataPolicy::Hidden);
    println!("\n--- system ---\n{}\n--- user ---\n{}", prompt.system_text, prompt.user_text);

    // A prompt that leaks freshness: the audit names the field and offset.
    let mut leaky = prompt.clone();
    leaky.user_text = leaky.user_text.replacen("Task:", "Task (use the latest version, not the deprecated one):", 1);
    let shift = leaky.user_text.len() - prompt.user_text.len();
    let task_start = prompt.user_text.find("Task:").unwrap_or(0);
    for seg in &mut leaky.segments {
        if seg.start > task_start {
            seg.start += shift;
        }
        if seg.end > task_start {
            seg.end += shift;
        }
    }
    let report = audit_prompt(&leaky, &Lexicon::default());
    println!("--- audit of an edited prompt ---");
    for v in &report.violations {
        println!("violation: {:?} `{}` at char {}", v.field_name, v.offending_token, v.char_offset);
    }
}
