//! Prompt rendering for the retrieval conditions.
//!
//! Context blocks carry opaque per-sample identifiers. Which of `a`/`b` holds the current
//! snippet is decided by a digest of the sample id, so the letter carries no freshness
//! signal across a dataset.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{audit_prompt, AuditReport, Lexicon};
use crate::builder::{short_id, DiagnosticSample};
use crate::condition::{Freshness, RetrievalCondition};

pub const SYSTEM_PROMPT: &str = "You are a coding assistant. Return only code, no explanation.\n\
Use the local file context and retrieved repository context\n\
as the available project evidence.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataPolicy {
    #[default]
    Hidden,
    Path,
}

impl std::str::FromStr for MetadataPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hidden" => Ok(MetadataPolicy::Hidden),
            "path" => Ok(MetadataPolicy::Path),
            other => Err(format!("unknown context metadata policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextIdAssignment {
    pub sample_id: String,
    pub id_for_current: String,
    pub id_for_stale: String,
}

impl ContextIdAssignment {
    pub fn id_for(&self, freshness: Freshness) -> &str {
        match freshness {
            Freshness::Current => &self.id_for_current,
            Freshness::Stale => &self.id_for_stale,
        }
    }

    pub fn current_is_a(&self) -> bool {
        self.id_for_current.ends_with("-a")
    }
}

/// SHA-256 of the sample id; an even first byte gives the current snippet the `a` id.
pub fn assign_context_ids(sample_id: &str) -> ContextIdAssignment {
    let digest = Sha256::digest(sample_id.as_bytes());
    let suffix = short_id(sample_id);
    let a = format!("ctx-{suffix}-a");
    let b = format!("ctx-{suffix}-b");
    let (id_for_current, id_for_stale) = if digest[0] % 2 == 0 { (a, b) } else { (b, a) };
    ContextIdAssignment {
        sample_id: sample_id.to_string(),
        id_for_current,
        id_for_stale,
    }
}

/// Model-visible field a span of prompt text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptField {
    SystemText,
    Template,
    LocalContext,
    TaskPrompt,
    ContextHeader,
    ContextId,
    SnippetBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub field: PromptField,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub context_id: String,
    pub snippet_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub sample_id: String,
    pub condition: RetrievalCondition,
    pub metadata_policy: MetadataPolicy,
    pub system_text: String,
    pub user_text: String,
    pub context_blocks: Vec<ContextBlock>,
    /// Byte ranges of `user_text`, tiling it, labelled by source field.
    pub segments: Vec<Segment>,
    pub audit: AuditReport,
}

impl RenderedPrompt {
    /// File stem used when prompts are written to disk.
    pub fn file_stem(&self) -> String {
        format!("{}__{}", self.sample_id, self.condition)
    }
}

struct UserTextBuilder {
    text: String,
    segments: Vec<Segment>,
}

impl UserTextBuilder {
    fn push(&mut self, field: PromptField, s: &str) {
        if s.is_empty() {
            return;
        }
        let start = self.text.len();
        self.text.push_str(s);
        match self.segments.last_mut() {
            Some(last) if last.field == field && last.end == start => last.end = self.text.len(),
            _ => self.segments.push(Segment {
                field,
                start,
                end: self.text.len(),
            }),
        }
    }
}

#[derive(Serialize)]
struct VisibleLocalContext<'a> {
    file_path: &'a str,
    prefix: &'a str,
}

/// Render one sample under one condition and audit it against the shipped lexicon.
pub fn render_prompt(
    sample: &DiagnosticSample,
    condition: RetrievalCondition,
    metadata_policy: MetadataPolicy,
) -> RenderedPrompt {
    let ids = assign_context_ids(&sample.sample_id);
    render_prompt_with(sample, condition, metadata_policy, &Lexicon::default(), &ids)
}

/// Render with an explicit lexicon and context-id assignment.
pub fn render_prompt_with(
    sample: &DiagnosticSample,
    condition: RetrievalCondition,
    metadata_policy: MetadataPolicy,
    lexicon: &Lexicon,
    ids: &ContextIdAssignment,
) -> RenderedPrompt {
    use PromptField::*;

    let context_blocks: Vec<ContextBlock> = condition
        .blocks()
        .iter()
        .map(|&f| ContextBlock {
            context_id: ids.id_for(f).to_string(),
            snippet_text: match f {
                Freshness::Current => sample.current_snippet.clone(),
                Freshness::Stale => sample.stale_snippet.clone(),
            },
        })
        .collect();

    let local = serde_json::to_string_pretty(&VisibleLocalContext {
        file_path: &sample.local_context.file_path,
        prefix: &sample.local_context.prefix,
    })
    .expect("string fields serialize");

    let mut b = UserTextBuilder {
        text: String::new(),
        segments: Vec::new(),
    };
    b.push(Template, "Local file context:\n");
    b.push(LocalContext, &local);
    b.push(Template, "\n\nTask:\n");
    b.push(TaskPrompt, &sample.task_prompt);
    if !context_blocks.is_empty() {
        b.push(Template, "\n\nRetrieved repository context:\n");
        for (i, block) in context_blocks.iter().enumerate() {
            if i > 0 {
                b.push(Template, "\n\n");
            }
            b.push(ContextHeader, "[CONTEXT id=");
            b.push(ContextId, &block.context_id);
            if metadata_policy == MetadataPolicy::Path {
                b.push(
                    ContextHeader,
                    &format!(" path={}", sample.oracle_metadata.file_path),
                );
            }
            b.push(ContextHeader, "]");
            b.push(Template, "\n");
            b.push(SnippetBody, block.snippet_text.trim_end_matches('\n'));
        }
    }
    b.push(
        Template,
        &format!(
            "\n\nReturn only a minimal {} code snippet that completes the task.",
            sample.language_tag
        ),
    );

    let mut prompt = RenderedPrompt {
        sample_id: sample.sample_id.clone(),
        condition,
        metadata_policy,
        system_text: SYSTEM_PROMPT.to_string(),
        user_text: b.text,
        context_blocks,
        segments: b.segments,
        audit: AuditReport::default(),
    };
    prompt.audit = audit_prompt(&prompt, lexicon);
    prompt
}

impl RenderedPrompt {
    /// Byte range and field of every segment of `user_text`.
    pub fn user_segments(&self) -> impl Iterator<Item = (PromptField, Range<usize>)> + '_ {
        self.segments.iter().map(|s| (s.field, s.start..s.end))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_sample;
    use crate::builder::tests::change;

    fn nullpager() -> DiagnosticSample {
        let mut c = change("_nullpager", &["stream", "generator", "color"], &["stream", "color"]);
        c.stale_signature.definition_text = "def _nullpager(\n    stream: t.TextIO, generator: cabc.Iterable[str], color: bool | None\n) -> None:\n    \"\"\"Simply print unformatted text.  This is the ultimate fallback.\"\"\"\n    for text in generator:\n        if not color:\n            text = strip_ansi(text)\n        stream.write(text)\n".into();
        build_sample(&c, 1).unwrap()
    }

    #[test]
    fn stale_only_prompt_shape() {
        let s = nullpager();
        let p = render_prompt(&s, RetrievalCondition::StaleContextOnly, MetadataPolicy::Hidden);
        let id = assign_context_ids(&s.sample_id).id_for_stale;
        let expected = format!(
            "Local file context:\n\
{{\n  \"file_path\": \"generated/call_site.py\",\n  \"prefix\": \"def invoke_target(stream, color, generator):\\n    \"\n}}\n\
\n\
Task:\n\
Complete invoke_target(stream, color, generator)\n\
by calling the repository helper shown in the retrieved context.\n\
\n\
Retrieved repository context:\n\
[CONTEXT id={id}]\n\
{}\n\
\n\
Return only a minimal python code snippet that completes the task.",
            s.stale_snippet.trim_end()
        );
        assert_eq!(p.user_text, expected);
        assert_eq!(p.system_text, SYSTEM_PROMPT);
        assert_eq!(p.context_blocks.len(), 1);
        assert!(p.context_blocks[0].snippet_text.contains("generator: cabc.Iterable[str]"));
        assert!(p.audit.clean, "{:?}", p.audit);
        let tiles: usize = p.segments.iter().map(|s| s.end - s.start).sum();
        assert_eq!(tiles, p.user_text.len());
    }

    #[test]
    fn no_retrieval_has_no_context_section() {
        let p = render_prompt(&nullpager(), RetrievalCondition::NoRetrieval, MetadataPolicy::Path);
        assert!(!p.user_text.contains("[CONTEXT"));
        assert!(!p.user_text.contains("Retrieved repository context"));
        assert!(p.context_blocks.is_empty());
    }

    #[test]
    fn mixed_orders_differ_only_in_order() {
        let s = nullpager();
        let cur_first = render_prompt(&s, RetrievalCondition::MixedCurrentTop1StaleTop2, MetadataPolicy::Hidden);
        let stale_first = render_prompt(&s, RetrievalCondition::MixedStaleTop1CurrentTop2, MetadataPolicy::Hidden);
        assert_eq!(cur_first.context_blocks.len(), 2);
        let mut reversed = stale_first.context_blocks.clone();
        reversed.reverse();
        assert_eq!(cur_first.context_blocks, reversed);

        let block = |b: &ContextBlock| format!("[CONTEXT id={}]\n{}", b.context_id, b.snippet_text.trim_end());
        let (x, y) = (block(&cur_first.context_blocks[0]), block(&cur_first.context_blocks[1]));
        let swapped = cur_first
            .user_text
            .replace(&x, "\u{0}")
            .replace(&y, &x)
            .replace('\u{0}', &y);
        assert_eq!(swapped, stale_first.user_text);
    }

    #[test]
    fn path_policy_exposes_file_path() {
        let s = nullpager();
        let hidden = render_prompt(&s, RetrievalCondition::CurrentContextOnly, MetadataPolicy::Hidden);
        let path = render_prompt(&s, RetrievalCondition::CurrentContextOnly, MetadataPolicy::Path);
        assert!(!hidden.user_text.contains("src/pkg/helpers.py"));
        assert!(path.user_text.contains(" path=src/pkg/helpers.py]"));
    }

    #[test]
    fn render_is_deterministic_and_snippets_invariant() {
        let s = nullpager();
        for c in RetrievalCondition::ALL {
            let a = render_prompt(&s, c, MetadataPolicy::Hidden);
            let b = render_prompt(&s, c, MetadataPolicy::Hidden);
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            for block in &a.context_blocks {
                assert!(block.snippet_text == s.current_snippet || block.snippet_text == s.stale_snippet);
            }
        }
    }

    #[test]
    fn assignment_is_pure_and_opaque() {
        let a = assign_context_ids("stale-repo-static-sig-001");
        assert_eq!(a, assign_context_ids("stale-repo-static-sig-001"));
        assert_ne!(a.id_for_current, a.id_for_stale);
        let mut ids = [a.id_for_current.clone(), a.id_for_stale.clone()];
        ids.sort();
        assert_eq!(ids, ["ctx-sig-001-a", "ctx-sig-001-b"]);
    }

    #[test]
    fn a_fraction_near_half() {
        let n = 1000;
        let a = (0..n)
            .filter(|i| assign_context_ids(&format!("synthetic-{i:04}")).current_is_a())
            .count();
        let frac = a as f64 / n as f64;
        assert!((0.4..=0.6).contains(&frac), "{frac}");
    }
}
