//! Output normalization and static classification against paired call patterns.

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::DiagnosticSample;
use crate::callsite::{CompiledPatternSet, PatternError, PatternSet};
use crate::condition::RetrievalCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    CurrentMatch,
    StaleReference,
    FailNoMatch,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [
        Outcome::CurrentMatch,
        Outcome::StaleReference,
        Outcome::FailNoMatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::CurrentMatch => "CurrentMatch",
            Outcome::StaleReference => "StaleReference",
            Outcome::FailNoMatch => "FailNoMatch",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Oracle verdict for one output. A stale match takes precedence over a current match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub value: Outcome,
    pub matched_current: bool,
    pub matched_stale: bool,
}

impl Classification {
    pub fn from_matches(matched_current: bool, matched_stale: bool) -> Self {
        let value = match (matched_current, matched_stale) {
            (_, true) => Outcome::StaleReference,
            (true, false) => Outcome::CurrentMatch,
            (false, false) => Outcome::FailNoMatch,
        };
        Classification {
            value,
            matched_current,
            matched_stale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxonomyLabel {
    NewArgumentOmitted,
    ObsoleteArgumentRetained,
    StaleHelperReconstruction,
}

impl TaxonomyLabel {
    pub const ALL: [TaxonomyLabel; 3] = [
        TaxonomyLabel::NewArgumentOmitted,
        TaxonomyLabel::ObsoleteArgumentRetained,
        TaxonomyLabel::StaleHelperReconstruction,
    ];

    pub fn title(self) -> &'static str {
        match self {
            TaxonomyLabel::NewArgumentOmitted => "New argument omitted",
            TaxonomyLabel::ObsoleteArgumentRetained => "Obsolete argument retained",
            TaxonomyLabel::StaleHelperReconstruction => "Stale helper reconstruction",
        }
    }
}

/// One result-log row: a model output and its oracle decision for one grid cell.
///
/// `classification` is absent when the cell errored; `error` then carries the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub sample_id: String,
    pub condition: RetrievalCondition,
    pub model_name: String,
    #[serde(default)]
    pub repo_name: String,
    pub raw_output: String,
    pub normalized_output: String,
    pub matched_current: bool,
    pub matched_stale: bool,
    pub classification: Option<Outcome>,
    pub taxonomy_label: Option<TaxonomyLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CompletionRecord {
    pub fn key(&self) -> (&str, RetrievalCondition) {
        (&self.sample_id, self.condition)
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some() || self.classification.is_none()
    }

    #[cfg(test)]
    pub(crate) fn with_outcome(outcome: Outcome) -> Self {
        CompletionRecord {
            sample_id: String::new(),
            condition: RetrievalCondition::CurrentContextOnly,
            model_name: String::new(),
            repo_name: String::new(),
            raw_output: String::new(),
            normalized_output: String::new(),
            matched_current: outcome == Outcome::CurrentMatch,
            matched_stale: outcome == Outcome::StaleReference,
            classification: Some(outcome),
            taxonomy_label: None,
            request_fingerprint: None,
            error: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("record for {0} is not a stale reference")]
    NotStale(String),
    #[error("current and stale signatures of {0} have equal arity")]
    EqualArity(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Byte-level tokenizer marker glyphs and their plain-text equivalents.
pub const DEFAULT_ARTIFACT_GLYPHS: &[(char, &str)] = &[
    ('\u{0120}', " "),  // Ġ
    ('\u{010A}', "\n"), // Ċ
    ('\u{0109}', "\t"), // ĉ
    ('\u{010D}', "\r"), // č
    ('\u{2581}', " "),  // ▁
];

#[derive(Debug, Clone)]
pub struct Normalizer {
    glyphs: Vec<(char, String)>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(
            DEFAULT_ARTIFACT_GLYPHS
                .iter()
                .map(|(c, s)| (*c, s.to_string())),
        )
    }
}

impl Normalizer {
    pub fn new(glyphs: impl IntoIterator<Item = (char, String)>) -> Self {
        Normalizer {
            glyphs: glyphs.into_iter().collect(),
        }
    }

    /// Replace artifact glyphs, unify line endings, and keep only fenced code when present.
    pub fn normalize(&self, raw: &str) -> String {
        let mut text = String::with_capacity(raw.len());
        for ch in raw.chars() {
            match self.glyphs.iter().find(|(g, _)| *g == ch) {
                Some((_, plain)) => text.push_str(plain),
                None => text.push(ch),
            }
        }
        let text = text.replace("\r\n", "\n").replace('\r', "\n");
        extract_fenced(&text).unwrap_or(text)
    }
}

pub fn normalize_output(raw: &str) -> String {
    Normalizer::default().normalize(raw)
}

const FENCE: &str = "```";

/// Concatenated contents of every fenced block, or `None` if there is no fence.
/// An unterminated final fence runs to the end of the text.
fn extract_fenced(text: &str) -> Option<String> {
    let mut rest = text.find(FENCE).map(|i| &text[i + FENCE.len()..])?;
    let mut out = String::new();
    loop {
        let line_end = rest.find('\n').unwrap_or(rest.len());
        let body = match rest[..line_end].find(FENCE) {
            // single-line fence: ```code```
            Some(close) => {
                let body = &rest[..close];
                rest = &rest[close + FENCE.len()..];
                body
            }
            None => {
                // skip the info string
                let after_info = &rest[(line_end + 1).min(rest.len())..];
                match after_info.find(FENCE) {
                    Some(close) => {
                        rest = &after_info[close + FENCE.len()..];
                        &after_info[..close]
                    }
                    None => {
                        rest = "";
                        after_info
                    }
                }
            }
        };
        out.push_str(body);
        if !body.is_empty() && !body.ends_with('\n') {
            out.push('\n');
        }
        match rest.find(FENCE) {
            Some(i) => rest = &rest[i + FENCE.len()..],
            None => return Some(out),
        }
    }
}

/// True iff any pattern in the set matches a call site in `code`.
pub fn match_call(code: &str, patterns: &PatternSet) -> Result<bool, PatternError> {
    Ok(patterns.compile()?.is_match(code))
}

/// Compiled oracle for one sample.
#[derive(Debug, Clone)]
pub struct SampleOracle {
    current: CompiledPatternSet,
    stale: CompiledPatternSet,
    definition: Regex,
    current_arity: usize,
    stale_arity: usize,
    sample_id: String,
    normalizer: Normalizer,
}

impl SampleOracle {
    pub fn new(sample: &DiagnosticSample) -> Result<Self, PatternError> {
        let helper = regex::escape(sample.helper_name());
        Ok(SampleOracle {
            current: sample.current_patterns.compile()?,
            stale: sample.stale_patterns.compile()?,
            definition: Regex::new(&format!(r"(?m)\bdef\s+{helper}\s*\(")).expect("escaped name"),
            current_arity: sample.oracle_metadata.current_signature.call_arity(),
            stale_arity: sample.oracle_metadata.stale_signature.call_arity(),
            sample_id: sample.sample_id.clone(),
            normalizer: Normalizer::default(),
        })
    }

    pub fn normalize(&self, raw: &str) -> String {
        self.normalizer.normalize(raw)
    }

    pub fn classify_normalized(&self, normalized: &str) -> Classification {
        Classification::from_matches(
            self.current.is_match(normalized),
            self.stale.is_match(normalized),
        )
    }

    pub fn classify(&self, raw: &str) -> Classification {
        self.classify_normalized(&self.normalize(raw))
    }

    /// Failure mode of a stale-reference output. Helper reconstruction is checked first.
    pub fn label(&self, normalized: &str, classification: Outcome) -> Result<TaxonomyLabel, OracleError> {
        if classification != Outcome::StaleReference {
            return Err(OracleError::NotStale(self.sample_id.clone()));
        }
        if self.definition.is_match(normalized) {
            return Ok(TaxonomyLabel::StaleHelperReconstruction);
        }
        match self.current_arity.cmp(&self.stale_arity) {
            std::cmp::Ordering::Greater => Ok(TaxonomyLabel::NewArgumentOmitted),
            std::cmp::Ordering::Less => Ok(TaxonomyLabel::ObsoleteArgumentRetained),
            std::cmp::Ordering::Equal => Err(OracleError::EqualArity(self.sample_id.clone())),
        }
    }

    /// Classify and, for stale references, label one output into a result row.
    pub fn record(
        &self,
        condition: RetrievalCondition,
        model_name: &str,
        repo_name: &str,
        raw_output: &str,
    ) -> CompletionRecord {
        let normalized_output = self.normalize(raw_output);
        let c = self.classify_normalized(&normalized_output);
        let taxonomy_label = self.label(&normalized_output, c.value).ok();
        CompletionRecord {
            sample_id: self.sample_id.clone(),
            condition,
            model_name: model_name.to_string(),
            repo_name: repo_name.to_string(),
            raw_output: raw_output.to_string(),
            normalized_output,
            matched_current: c.matched_current,
            matched_stale: c.matched_stale,
            classification: Some(c.value),
            taxonomy_label,
            request_fingerprint: None,
            error: None,
        }
    }
}

pub fn classify(raw: &str, sample: &DiagnosticSample) -> Result<Classification, PatternError> {
    Ok(SampleOracle::new(sample)?.classify(raw))
}

pub fn label_taxonomy(
    record: &CompletionRecord,
    sample: &DiagnosticSample,
) -> Result<TaxonomyLabel, OracleError> {
    let outcome = record
        .classification
        .ok_or_else(|| OracleError::NotStale(record.sample_id.clone()))?;
    SampleOracle::new(sample)?.label(&record.normalized_output, outcome)
}
