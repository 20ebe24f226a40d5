//! Python function-definition extraction over a tree-sitter parse tree.

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser};

use super::MinerError;

/// One function or method definition as it appears in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSignature {
    pub function_name: String,
    /// Dotted path through enclosing classes and functions, e.g. `Client._init_proxy_transport`.
    pub qualified_name: String,
    /// Parameter names in declaration order, without annotations, defaults or `*`/`**` markers.
    pub parameter_names: Vec<String>,
    pub parameter_count: usize,
    /// 1-based inclusive line range of the whole definition, decorators included.
    pub source_span: (usize, usize),
    /// The `def ...:` header exactly as written (may span several lines).
    pub raw_text: String,
    pub file_path: String,
    /// True when the first parameter is bound at call time (`self`/`cls` of a method).
    #[serde(default)]
    pub bound_receiver: bool,
    /// Verbatim definition source, dedented to column zero.
    #[serde(default)]
    pub definition_text: String,
}

impl FunctionSignature {
    /// Number of arguments a call site passes explicitly.
    pub fn call_arity(&self) -> usize {
        self.parameter_count - usize::from(self.bound_receiver)
    }

    /// Parameters a caller supplies, i.e. without the bound receiver.
    pub fn call_parameters(&self) -> &[String] {
        if self.bound_receiver {
            &self.parameter_names[1..]
        } else {
            &self.parameter_names
        }
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_alphanumeric())
}

/// Extract every function definition in `source_text`, nested ones included, in source order.
pub fn extract_signatures(
    source_text: &str,
    file_path: &str,
) -> Result<Vec<FunctionSignature>, MinerError> {
    if source_text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_python::LANGUAGE.into())
        .map_err(|_| MinerError::ParseFailure(file_path.to_string()))?;
    let tree = parser
        .parse(source_text, None)
        .ok_or_else(|| MinerError::ParseFailure(file_path.to_string()))?;
    let root = tree.root_node();
    if root.has_error() {
        return Err(MinerError::ParseFailure(file_path.to_string()));
    }

    let mut out = Vec::new();
    let mut scope = Vec::new();
    walk(root, source_text, file_path, &mut scope, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scope {
    Class,
    Function,
}

fn walk<'a>(
    node: Node<'a>,
    src: &'a str,
    file_path: &str,
    scope: &mut Vec<(Scope, String)>,
    out: &mut Vec<FunctionSignature>,
) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        match child.kind() {
            "function_definition" => {
                let sig = signature_of(child, src, file_path, scope);
                let name = sig.function_name.clone();
                out.push(sig);
                scope.push((Scope::Function, name));
                if let Some(body) = child.child_by_field_name("body") {
                    walk(body, src, file_path, scope, out);
                }
                scope.pop();
            }
            "class_definition" => {
                let name = child
                    .child_by_field_name("name")
                    .map(|n| text(n, src).to_string())
                    .unwrap_or_default();
                scope.push((Scope::Class, name));
                if let Some(body) = child.child_by_field_name("body") {
                    walk(body, src, file_path, scope, out);
                }
                scope.pop();
            }
            _ => walk(child, src, file_path, scope, out),
        }
    }
}

fn text<'a>(node: Node<'_>, src: &'a str) -> &'a str {
    &src[node.byte_range()]
}

fn signature_of(
    def: Node<'_>,
    src: &str,
    file_path: &str,
    scope: &[(Scope, String)],
) -> FunctionSignature {
    let function_name = def
        .child_by_field_name("name")
        .map(|n| text(n, src).to_string())
        .unwrap_or_default();

    let decorated = def
        .parent()
        .filter(|p| p.kind() == "decorated_definition");
    let decorators: Vec<String> = decorated
        .map(|d| {
            let mut c = d.walk();
            d.named_children(&mut c)
                .filter(|n| n.kind() == "decorator")
                .map(|n| text(n, src).trim_start_matches('@').trim().to_string())
                .collect()
        })
        .unwrap_or_default();
    let outer = decorated.unwrap_or(def);

    let mut parameter_names = Vec::new();
    let header_end = match def.child_by_field_name("parameters") {
        Some(params) => {
            let mut c = params.walk();
            for p in params.named_children(&mut c) {
                if let Some(name) = parameter_name(p, src) {
                    parameter_names.push(name);
                }
            }
            def.child_by_field_name("return_type")
                .map(|r| r.end_byte())
                .unwrap_or(params.end_byte())
        }
        None => def.start_byte(),
    };
    let colon = src[header_end..]
        .find(':')
        .map(|i| header_end + i + 1)
        .unwrap_or(header_end);
    let raw_text = src[def.start_byte()..colon].to_string();

    let in_class = matches!(scope.last(), Some((Scope::Class, _)));
    let is_static = decorators.iter().any(|d| d == "staticmethod");
    let bound_receiver = in_class && !is_static && !parameter_names.is_empty();

    let mut qualified: Vec<&str> = scope.iter().map(|(_, n)| n.as_str()).collect();
    qualified.push(&function_name);
    let qualified_name = qualified.join(".");

    let start_line = outer.start_position().row + 1;
    let end_line = outer.end_position().row + 1;

    FunctionSignature {
        parameter_count: parameter_names.len(),
        function_name,
        qualified_name,
        parameter_names,
        source_span: (start_line, end_line),
        raw_text,
        file_path: file_path.to_string(),
        bound_receiver,
        definition_text: definition_lines(src, start_line, end_line),
    }
}

fn parameter_name(node: Node<'_>, src: &str) -> Option<String> {
    match node.kind() {
        "identifier" => Some(text(node, src).to_string()),
        // bare `*` and `/` separators are not parameters
        "keyword_separator" | "positional_separator" => None,
        "default_parameter" | "typed_default_parameter" => node
            .child_by_field_name("name")
            .and_then(|n| parameter_name(n, src)),
        "typed_parameter" | "list_splat_pattern" | "dictionary_splat_pattern" => {
            let mut c = node.walk();
            let first = node.named_children(&mut c).next();
            first.and_then(|n| parameter_name(n, src))
        }
        _ => None,
    }
}

fn definition_lines(src: &str, start: usize, end: usize) -> String {
    let lines: Vec<&str> = src.lines().skip(start - 1).take(end + 1 - start).collect();
    let indent = lines
        .first()
        .map(|l| l.len() - l.trim_start().len())
        .unwrap_or(0);
    let mut out = String::new();
    for line in lines {
        let cut = line
            .char_indices()
            .take_while(|(i, c)| *i < indent && c.is_whitespace())
            .count();
        out.push_str(&line[cut..]);
        out.push('\n');
    }
    out
}
