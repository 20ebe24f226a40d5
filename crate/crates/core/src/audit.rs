//! Leakage audit over model-visible prompt fields.
//!
//! Lexicon tokens match case-insensitively on word boundaries, with spaces in a phrase also
//! matching `-` and `_`. They are hard violations everywhere except inside snippet bodies, where
//! ordinary source text may legitimately use words like `deprecated`; those hits are
//! reported as advisories. Commit-hash-like strings are violations in every field.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prompt::{PromptField, RenderedPrompt};

/// The versioned default lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../lexicon.txt");

/// Hex runs of seven or more characters, the shortest abbreviated commit id git prints.
pub const DEFAULT_HASH_PATTERN: &str = r"\b[0-9a-fA-F]{7,}\b";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub field_name: PromptField,
    pub offending_token: String,
    /// Offset in characters from the start of the field.
    pub char_offset: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub clean: bool,
    pub violations: Vec<Finding>,
    #[serde(default)]
    pub advisories: Vec<Finding>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    tokens: Vec<(String, Regex)>,
    hash: Regex,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon is empty")]
    Empty,
    #[error("invalid hash pattern: {0}")]
    HashPattern(#[from] regex::Error),
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::parse(DEFAULT_LEXICON, DEFAULT_HASH_PATTERN).expect("shipped lexicon is valid")
    }
}

impl Lexicon {
    /// Parse a lexicon file: one token per line, `#` starts a comment line.
    pub fn parse(text: &str, hash_pattern: &str) -> Result<Self, LexiconError> {
        let tokens: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        Lexicon::new(tokens, hash_pattern)
    }

    pub fn new(tokens: Vec<String>, hash_pattern: &str) -> Result<Self, LexiconError> {
        if tokens.is_empty() {
            return Err(LexiconError::Empty);
        }
        let tokens = tokens
            .into_iter()
            .map(|t| {
                let body = t
                    .split_whitespace()
                    .map(regex::escape)
                    .collect::<Vec<_>>()
                    .join(r"[\s_\-]+");
                let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
                let lead = if word(t.chars().next()) { r"\b" } else { "" };
                let trail = if word(t.chars().last()) { r"\b" } else { "" };
                let re = Regex::new(&format!("(?i){lead}{body}{trail}")).expect("escaped token");
                (t, re)
            })
            .collect();
        Ok(Lexicon {
            tokens,
            hash: Regex::new(hash_pattern)?,
        })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|(t, _)| t.as_str())
    }

    fn lexicon_hits<'t>(&self, text: &'t str) -> Vec<(usize, &'t str)> {
        let mut hits: Vec<(usize, &str)> = self
            .tokens
            .iter()
            .flat_map(|(_, re)| re.find_iter(text).map(|m| (m.start(), m.as_str())))
            .collect();
        hits.sort();
        hits
    }

    /// Hex runs that look like commit ids: they must mix digits and letters.
    fn hash_hits<'t>(&self, text: &'t str) -> Vec<(usize, &'t str)> {
        self.hash
            .find_iter(text)
            .filter(|m| {
                let s = m.as_str();
                s.bytes().any(|b| b.is_ascii_digit()) && s.bytes().any(|b| b.is_ascii_alphabetic())
            })
            .map(|m| (m.start(), m.as_str()))
            .collect()
    }
}

fn finding(field: PromptField, token: &str, field_text_before: &str) -> Finding {
    Finding {
        field_name: field,
        offending_token: token.to_string(),
        char_offset: field_text_before.chars().count(),
    }
}

/// Scan every model-visible field of a rendered prompt. Never modifies the prompt.
pub fn audit_prompt(rendered: &RenderedPrompt, lexicon: &Lexicon) -> AuditReport {
    let mut violations = Vec::new();
    let mut advisories = Vec::new();

    let sys = &rendered.system_text;
    for (at, tok) in lexicon.lexicon_hits(sys).into_iter().chain(lexicon.hash_hits(sys)) {
        violations.push(finding(PromptField::SystemText, tok, &sys[..at]));
    }

    let user = &rendered.user_text;
    for (field, range) in rendered.user_segments() {
        let Some(text) = user.get(range) else {
            continue;
        };
        for (at, tok) in lexicon.lexicon_hits(text) {
            let f = finding(field, tok, &text[..at]);
            if field == PromptField::SnippetBody {
                advisories.push(f);
            } else {
                violations.push(f);
            }
        }
        for (at, tok) in lexicon.hash_hits(text) {
            violations.push(finding(field, tok, &text[..at]));
        }
    }

    violations.sort_by_key(|v| (v.field_name, v.char_offset));
    violations.dedup();
    AuditReport {
        clean: violations.is_empty(),
        violations,
        advisories,
    }
}
