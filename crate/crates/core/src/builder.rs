//! Turning mined signature changes into diagnostic samples.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::callsite::{build_call_patterns, canonical_call, PatternError, PatternSet};
use crate::condition::RetrievalCondition;
use crate::miner::SignatureChange;
use crate::oracle::{CompletionRecord, Outcome};

pub const WRAPPER_NAME: &str = "invoke_target";
pub const WRAPPER_FILE: &str = "generated/call_site.py";
pub const SAMPLE_ID_PREFIX: &str = "stale-repo-static-";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("snippet unavailable at {0}:{1}")]
    SnippetUnavailable(String, String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("current and stale call patterns for `{0}` are not separable")]
    OracleAmbiguous(String),
    #[error("no gate row for sample {0}")]
    MissingGateRow(String),
    #[error("more than one gate row for sample {0}")]
    DuplicateGateRow(String),
    #[error("duplicate sample id {0}")]
    DuplicateSampleId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalContext {
    pub file_path: String,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticSample {
    pub sample_id: String,
    pub repo_name: String,
    pub local_context: LocalContext,
    pub task_prompt: String,
    pub current_snippet: String,
    pub stale_snippet: String,
    pub current_patterns: PatternSet,
    pub stale_patterns: PatternSet,
    pub expected_sketch: String,
    pub forbidden_sketch: String,
    pub language_tag: String,
    /// Never shown to a model.
    #[serde(rename = "oracle_only")]
    pub oracle_metadata: SignatureChange,
}

impl DiagnosticSample {
    /// Id with the dataset prefix removed, e.g. `sig-001`.
    pub fn short_id(&self) -> &str {
        short_id(&self.sample_id)
    }

    pub fn helper_name(&self) -> &str {
        &self.oracle_metadata.function_name
    }

    /// The call the current signature expects, with its parameter names as arguments.
    pub fn canonical_current_call(&self) -> String {
        let sig = &self.oracle_metadata.current_signature;
        canonical_call(&sig.function_name, sig.call_parameters())
    }

    pub fn canonical_stale_call(&self) -> String {
        let sig = &self.oracle_metadata.stale_signature;
        canonical_call(&sig.function_name, sig.call_parameters())
    }
}

pub fn short_id(sample_id: &str) -> &str {
    sample_id
        .strip_prefix(SAMPLE_ID_PREFIX)
        .unwrap_or(sample_id)
}

pub fn sample_id(id_seq: usize) -> String {
    format!("{SAMPLE_ID_PREFIX}sig-{id_seq:03}")
}

/// Wrapper parameters: current call order first, then names only the stale signature has.
pub fn wrapper_parameters(change: &SignatureChange) -> Vec<String> {
    let mut params: Vec<String> = change.current_signature.call_parameters().to_vec();
    for p in change.stale_signature.call_parameters() {
        if !params.contains(p) {
            params.push(p.clone());
        }
    }
    params
}

pub fn build_sample(change: &SignatureChange, id_seq: usize) -> Result<DiagnosticSample, BuildError> {
    let current = &change.current_signature;
    let stale = &change.stale_signature;
    if current.definition_text.trim().is_empty() {
        return Err(BuildError::SnippetUnavailable(
            change.child_commit.clone(),
            change.file_path.clone(),
        ));
    }
    if stale.definition_text.trim().is_empty() {
        return Err(BuildError::SnippetUnavailable(
            change.parent_commit.clone(),
            change.file_path.clone(),
        ));
    }

    let current_patterns = build_call_patterns(current)?;
    let stale_patterns = build_call_patterns(stale)?;
    let current_call = canonical_call(&current.function_name, current.call_parameters());
    let stale_call = canonical_call(&stale.function_name, stale.call_parameters());
    let (cur_c, stale_c) = (current_patterns.compile()?, stale_patterns.compile()?);
    if stale_c.is_match(&current_call) || cur_c.is_match(&stale_call) {
        return Err(BuildError::OracleAmbiguous(change.function_name.clone()));
    }

    let params = wrapper_parameters(change).join(", ");
    let header = format!("{WRAPPER_NAME}({params})");
    Ok(DiagnosticSample {
        sample_id: sample_id(id_seq),
        repo_name: change.repo_name.clone(),
        local_context: LocalContext {
            file_path: WRAPPER_FILE.to_string(),
            prefix: format!("def {header}:\n    "),
        },
        task_prompt: format!(
            "Complete {header}\nby calling the repository helper shown in the retrieved context."
        ),
        current_snippet: current.definition_text.clone(),
        stale_snippet: stale.definition_text.clone(),
        expected_sketch: format!("{WRAPPER_NAME} calls {current_call}"),
        forbidden_sketch: format!("{WRAPPER_NAME} calls {stale_call}"),
        current_patterns,
        stale_patterns,
        language_tag: "python".to_string(),
        oracle_metadata: change.clone(),
    })
}

/// Build samples with sequential ids starting at 1, skipping candidates that cannot be built.
pub fn build_dataset(
    changes: &[SignatureChange],
) -> (Vec<DiagnosticSample>, Vec<(SignatureChange, BuildError)>) {
    let mut built = Vec::new();
    let mut skipped = Vec::new();
    for change in changes {
        match build_sample(change, built.len() + 1) {
            Ok(s) => built.push(s),
            Err(e) => skipped.push((change.clone(), e)),
        }
    }
    (built, skipped)
}

pub fn check_unique_ids(samples: &[DiagnosticSample]) -> Result<(), BuildError> {
    let mut seen = HashSet::new();
    for s in samples {
        if !seen.insert(s.sample_id.as_str()) {
            return Err(BuildError::DuplicateSampleId(s.sample_id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub sample_id: String,
    pub retained: bool,
    pub gate_classification: Outcome,
    pub gate_model: String,
}

/// Keep samples whose current-context gate completion is a current match.
pub fn quality_gate(
    samples: &[DiagnosticSample],
    gate_rows: &[CompletionRecord],
) -> Result<(Vec<DiagnosticSample>, Vec<GateDecision>), BuildError> {
    let mut by_id: HashMap<&str, &CompletionRecord> = HashMap::new();
    for row in gate_rows
        .iter()
        .filter(|r| r.condition == RetrievalCondition::CurrentContextOnly)
    {
        if by_id.insert(&row.sample_id, row).is_some() {
            return Err(BuildError::DuplicateGateRow(row.sample_id.clone()));
        }
    }
    let mut decisions = Vec::with_capacity(samples.len());
    for s in samples {
        let row = by_id
            .get(s.sample_id.as_str())
            .ok_or_else(|| BuildError::MissingGateRow(s.sample_id.clone()))?;
        let gate_classification = row.classification.unwrap_or(Outcome::FailNoMatch);
        decisions.push(GateDecision {
            sample_id: s.sample_id.clone(),
            retained: gate_classification == Outcome::CurrentMatch,
            gate_classification,
            gate_model: row.model_name.clone(),
        });
    }
    let retained = samples
        .iter()
        .zip(&decisions)
        .filter(|(_, d)| d.retained)
        .map(|(s, _)| s.clone())
        .collect();
    let excluded = decisions.into_iter().filter(|d| !d.retained).collect();
    Ok((retained, excluded))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::miner::{ChangeKind, FunctionSignature};

    pub(crate) fn signature(name: &str, params: &[&str]) -> FunctionSignature {
        let raw_text = format!("def {name}({}):", params.join(", "));
        FunctionSignature {
            function_name: name.into(),
            qualified_name: name.into(),
            parameter_names: params.iter().map(|s| s.to_string()).collect(),
            parameter_count: params.len(),
            source_span: (1, 2),
            definition_text: format!("{raw_text}\n    pass\n"),
            raw_text,
            file_path: "src/pkg/helpers.py".into(),
            bound_receiver: false,
        }
    }

    pub(crate) fn change(name: &str, stale: &[&str], current: &[&str]) -> SignatureChange {
        let stale_signature = signature(name, stale);
        let current_signature = signature(name, current);
        SignatureChange {
            repo_name: "click".into(),
            file_path: "src/pkg/helpers.py".into(),
            function_name: name.into(),
            parent_commit: "a".repeat(40),
            child_commit: "b".repeat(40),
            signature_delta: crate::miner::signature_delta(
                &stale_signature.parameter_names,
                &current_signature.parameter_names,
            ),
            stale_signature,
            current_signature,
            change_kind: ChangeKind::SignatureChange,
        }
    }

    #[test]
    fn nullpager_wrapper_header() {
        let c = change("_nullpager", &["stream", "generator", "color"], &["stream", "color"]);
        let s = build_sample(&c, 1).unwrap();
        assert_eq!(s.sample_id, "stale-repo-static-sig-001");
        assert_eq!(s.short_id(), "sig-001");
        assert_eq!(
            s.local_context.prefix,
            "def invoke_target(stream, color, generator):\n    "
        );
        assert_eq!(
            s.task_prompt,
            "Complete invoke_target(stream, color, generator)\n\
             by calling the repository helper shown in the retrieved context."
        );
        assert_eq!(s.canonical_current_call(), "_nullpager(stream, color)");
        assert_eq!(s.canonical_stale_call(), "_nullpager(stream, generator, color)");
    }

    #[test]
    fn one_to_three_union_order() {
        // current order (a, b, c); stale has only `a`, so nothing is appended
        let c = change("grow", &["a"], &["a", "b", "c"]);
        assert_eq!(wrapper_parameters(&c), ["a", "b", "c"]);
        // current (x, b, c) then stale-only `a`
        let c = change("swap", &["a"], &["x", "b", "c"]);
        assert_eq!(wrapper_parameters(&c), ["x", "b", "c", "a"]);
        let s = build_sample(&c, 7).unwrap();
        assert_eq!(s.local_context.prefix, "def invoke_target(x, b, c, a):\n    ");
    }

    #[test]
    fn task_does_not_reveal_arity_or_helper() {
        let c = change("chop_cells", &["text", "width"], &["text", "width", "offset"]);
        let s = build_sample(&c, 27).unwrap();
        assert!(!s.task_prompt.contains("chop_cells"));
        assert!(!s.local_context.prefix.contains("chop_cells"));
    }

    #[test]
    fn equal_arity_rename_is_ambiguous() {
        let c = change("f", &["a", "b"], &["a", "c"]);
        assert_eq!(c.signature_delta, 2);
        assert_eq!(build_sample(&c, 1), Err(BuildError::OracleAmbiguous("f".into())));
    }

    #[test]
    fn missing_snippet() {
        let mut c = change("f", &["a"], &["a", "b"]);
        c.stale_signature.definition_text.clear();
        assert_eq!(
            build_sample(&c, 1),
            Err(BuildError::SnippetUnavailable("a".repeat(40), "src/pkg/helpers.py".into()))
        );
    }

    #[test]
    fn oracle_only_key_in_json() {
        let s = build_sample(&change("f", &["a"], &["a", "b"]), 1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert!(v.get("oracle_only").is_some());
        assert!(v.get("oracle_metadata").is_none());
    }

    fn gate_row(id: &str, outcome: Outcome) -> CompletionRecord {
        CompletionRecord {
            sample_id: id.into(),
            condition: RetrievalCondition::CurrentContextOnly,
            model_name: "gate-model".into(),
            ..CompletionRecord::with_outcome(outcome)
        }
    }

    fn samples(n: usize) -> Vec<DiagnosticSample> {
        (1..=n)
            .map(|i| build_sample(&change(&format!("h{i}"), &["a"], &["a", "b"]), i).unwrap())
            .collect()
    }

    #[test]
    fn gate_keeps_current_matches() {
        let ss = samples(19);
        let rows: Vec<_> = ss
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let o = if i == 11 || i == 17 {
                    Outcome::FailNoMatch
                } else {
                    Outcome::CurrentMatch
                };
                gate_row(&s.sample_id, o)
            })
            .collect();
        let (kept, excluded) = quality_gate(&ss, &rows).unwrap();
        assert_eq!(kept.len(), 17);
        assert_eq!(excluded.len(), 2);
        assert_eq!(excluded[0].sample_id, "stale-repo-static-sig-012");
        assert!(excluded.iter().all(|d| !d.retained && d.gate_model == "gate-model"));
    }

    #[test]
    fn gate_all_fail_and_missing_row() {
        let ss = samples(3);
        let rows: Vec<_> = ss
            .iter()
            .map(|s| gate_row(&s.sample_id, Outcome::FailNoMatch))
            .collect();
        let (kept, excluded) = quality_gate(&ss, &rows).unwrap();
        assert!(kept.is_empty());
        assert_eq!(excluded.len(), 3);
        assert_eq!(
            quality_gate(&ss, &rows[..2]),
            Err(BuildError::MissingGateRow(ss[2].sample_id.clone()))
        );
    }
}
