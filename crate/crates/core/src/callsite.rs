//! Static call-site patterns.
//!
//! A [`CallPattern`] pairs a regular expression that locates `name(` call sites with the
//! exact number of top-level arguments the call must carry. The regex alone cannot count
//! arguments through nested brackets, so matching is two-step: locate with the regex, then
//! scan the balanced argument list.
//!
//! Receiver-prefixed calls (`obj.name(...)`) and definitions (`def name(...)`) are never
//! call sites. Keyword arguments and `*`/`**` unpacking each count as one argument.

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::miner::{is_identifier, FunctionSignature};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("cannot synthesize a call pattern for `{0}`")]
    UnsynthesizablePattern(String),
    #[error("pattern `{0}` does not compile: {1}")]
    InvalidRegex(String, String),
    #[error("pattern `{0}` does not anchor on a function name")]
    Unanchored(String),
    #[error("pattern set is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallPattern {
    pub regex: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub call_patterns: Vec<CallPattern>,
    pub description: String,
}

/// Regex locating call sites of `name`; group `name` spans the function-name token.
pub fn call_site_regex(name: &str) -> String {
    format!(r"(?:^|[^\w.])(?P<name>{})\s*\(", regex::escape(name))
}

/// Canonical source text for a call passing `args` positionally.
pub fn canonical_call(name: &str, args: &[String]) -> String {
    format!("{name}({})", args.join(", "))
}

/// Patterns matching calls to the signature's function with exactly its call arity.
pub fn build_call_patterns(signature: &FunctionSignature) -> Result<PatternSet, PatternError> {
    let name = &signature.function_name;
    if !is_identifier(name) {
        return Err(PatternError::UnsynthesizablePattern(name.clone()));
    }
    Ok(PatternSet {
        call_patterns: vec![CallPattern {
            regex: call_site_regex(name),
            arity: signature.call_arity(),
        }],
        description: canonical_call(name, signature.call_parameters()),
    })
}

impl PatternSet {
    /// Check the set is non-empty and every pattern compiles and is anchored on a name.
    pub fn validate(&self) -> Result<(), PatternError> {
        if self.call_patterns.is_empty() {
            return Err(PatternError::Empty);
        }
        for p in &self.call_patterns {
            let re = Regex::new(&p.regex)
                .map_err(|e| PatternError::InvalidRegex(p.regex.clone(), e.to_string()))?;
            if re.capture_names().all(|n| n != Some("name")) {
                return Err(PatternError::Unanchored(p.regex.clone()));
            }
        }
        Ok(())
    }

    pub fn compile(&self) -> Result<CompiledPatternSet, PatternError> {
        self.validate()?;
        let patterns = self
            .call_patterns
            .iter()
            .map(|p| (Regex::new(&p.regex).expect("validated"), p.arity))
            .collect();
        Ok(CompiledPatternSet { patterns })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledPatternSet {
    patterns: Vec<(Regex, usize)>,
}

impl CompiledPatternSet {
    pub fn is_match(&self, code: &str) -> bool {
        self.patterns.iter().any(|(re, arity)| {
            call_sites(re, code).any(|open| count_arguments(&code[open..]) == Some(*arity))
        })
    }
}

/// Byte offsets of the opening parenthesis of every call site located by `re`.
fn call_sites<'a>(re: &'a Regex, code: &'a str) -> impl Iterator<Item = usize> + 'a {
    let mut pos = 0;
    std::iter::from_fn(move || loop {
        let caps = re.captures_at(code, pos)?;
        let name = caps.name("name").expect("anchored pattern");
        let whole = caps.get(0).expect("group 0");
        // the leading delimiter was consumed; resume after the name so a nested site whose
        // delimiter is this call's `(` is still found
        pos = name.end();
        if is_definition(&code[..name.start()]) {
            continue;
        }
        return Some(whole.end() - 1);
    })
}

fn is_definition(before: &str) -> bool {
    let trimmed = before.trim_end();
    if trimmed.len() == before.len() {
        return false;
    }
    trimmed
        .strip_suffix("def")
        .is_some_and(|rest| rest.chars().last().is_none_or(|c| !(c.is_alphanumeric() || c == '_')))
}

/// Number of top-level arguments in the bracketed list that starts at `text[0] == '('`.
///
/// Aware of nested brackets, string literals and `#` comments. A trailing comma does not
/// start a new argument. Returns `None` when the list is unterminated.
pub fn count_arguments(text: &str) -> Option<usize> {
    let mut chars = text.char_indices().peekable();
    match chars.next() {
        Some((_, '(')) => {}
        _ => return None,
    }
    let mut depth = 0usize;
    let mut args = 0usize;
    let mut segment_has_content = false;
    while let Some((i, c)) = chars.next() {
        match c {
            '#' => {
                while let Some(&(_, n)) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '\'' | '"' => {
                segment_has_content = true;
                let triple = text[i..].starts_with(&c.to_string().repeat(3));
                if triple {
                    chars.next();
                    chars.next();
                }
                skip_string(&mut chars, text, c, triple)?;
            }
            '(' | '[' | '{' => {
                depth += 1;
                segment_has_content = true;
            }
            ')' | ']' | '}' => {
                if depth == 0 {
                    if c != ')' {
                        return None;
                    }
                    return Some(args + usize::from(segment_has_content));
                }
                depth -= 1;
            }
            ',' if depth == 0 => {
                if segment_has_content {
                    args += 1;
                }
                segment_has_content = false;
            }
            c if c.is_whitespace() || c == '\\' => {}
            _ => segment_has_content = true,
        }
    }
    None
}

fn skip_string(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    text: &str,
    quote: char,
    triple: bool,
) -> Option<()> {
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => {
                chars.next();
            }
            c if c == quote => {
                if !triple {
                    return Some(());
                }
                if text[i..].starts_with(&quote.to_string().repeat(3)) {
                    chars.next();
                    chars.next();
                    return Some(());
                }
            }
            '\n' if !triple => return None,
            _ => {}
        }
    }
    None
}
