//! Mining signature changes from first-parent git history.

mod git;
mod python;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use git::{CommitInfo, GitRepo};
pub use python::{extract_signatures, FunctionSignature};
pub(crate) use python::is_identifier;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("failed to parse {0}")]
    ParseFailure(String),
    #[error("not a readable git repository: {0}")]
    RepoUnreadable(String),
    #[error("invalid commit range: {0}")]
    InvalidCommitRange(String),
    #[error("git: {0}")]
    Git(String),
}

/// Repository-relative path to file contents at one commit.
pub type FileMap = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    SignatureChange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureChange {
    pub repo_name: String,
    pub file_path: String,
    pub function_name: String,
    pub parent_commit: String,
    pub child_commit: String,
    pub stale_signature: FunctionSignature,
    pub current_signature: FunctionSignature,
    pub signature_delta: usize,
    pub change_kind: ChangeKind,
}

impl SignatureChange {
    /// Key under which changes to the same helper are collapsed.
    pub fn family(&self) -> (&str, &str) {
        (&self.file_path, &self.current_signature.qualified_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TestPath,
    TestFunction,
    ZeroDelta,
    DuplicateFamily,
    Dunder,
    HighArity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    #[serde(flatten)]
    pub candidate: SignatureChange,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub exclude_test_paths: Vec<String>,
    pub exclude_dunder: bool,
    pub max_arity: usize,
    pub dedupe_window: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            exclude_test_paths: ["test", "tests", "_test", "test_"]
                .map(String::from)
                .to_vec(),
            exclude_dunder: true,
            max_arity: 6,
            dedupe_window: 50,
        }
    }
}

pub const DEFAULT_COMMIT_LIMIT: usize = 500;

impl FilterConfig {
    /// A pattern matches a directory component exactly; `_x` also matches a file stem
    /// ending in `_x`, and `x_` a stem starting with `x_`.
    pub fn is_test_path(&self, path: &str) -> bool {
        let parts: Vec<&str> = path.split('/').collect();
        let (file, dirs) = parts.split_last().unwrap_or((&"", &[]));
        let stem = file.strip_suffix(".py").unwrap_or(file);
        self.exclude_test_paths.iter().any(|pat| {
            dirs.iter().any(|d| d == pat)
                || stem == pat
                || (pat.starts_with('_') && stem.ends_with(pat.as_str()))
                || (pat.ends_with('_') && stem.starts_with(pat.as_str()))
        })
    }
}

/// Count of parameters added plus removed, comparing names as multisets.
pub fn signature_delta(stale: &[String], current: &[String]) -> usize {
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for p in stale {
        *counts.entry(p).or_default() += 1;
    }
    for p in current {
        *counts.entry(p).or_default() -= 1;
    }
    counts.values().map(|c| c.unsigned_abs() as usize).sum()
}

fn is_python(path: &str) -> bool {
    path.ends_with(".py")
}

/// Changes for every function defined under the same path and qualified name in both trees
/// whose parameter lists differ. Commit ids and repository name are left empty.
pub fn diff_commit_pair(parent_tree: &FileMap, child_tree: &FileMap) -> Vec<SignatureChange> {
    let mut out = Vec::new();
    for (path, child_src) in child_tree.iter().filter(|(p, _)| is_python(p)) {
        let Some(parent_src) = parent_tree.get(path) else {
            continue;
        };
        if parent_src == child_src {
            continue;
        }
        let (Ok(stale_sigs), Ok(current_sigs)) = (
            extract_signatures(parent_src, path),
            extract_signatures(child_src, path),
        ) else {
            continue;
        };
        let mut stale_by_name: HashMap<&str, &FunctionSignature> = HashMap::new();
        for s in &stale_sigs {
            stale_by_name.entry(&s.qualified_name).or_insert(s);
        }
        let mut seen = std::collections::HashSet::new();
        for current in &current_sigs {
            if !seen.insert(current.qualified_name.as_str()) {
                continue;
            }
            let Some(stale) = stale_by_name.get(current.qualified_name.as_str()) else {
                continue;
            };
            if stale.parameter_names == current.parameter_names {
                continue;
            }
            out.push(SignatureChange {
                repo_name: String::new(),
                file_path: path.clone(),
                function_name: current.function_name.clone(),
                parent_commit: String::new(),
                child_commit: String::new(),
                signature_delta: signature_delta(&stale.parameter_names, &current.parameter_names),
                stale_signature: (*stale).clone(),
                current_signature: current.clone(),
                change_kind: ChangeKind::SignatureChange,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub retained: Vec<SignatureChange>,
    pub rejected: Vec<Rejection>,
}

struct Raw {
    change: SignatureChange,
    /// Position along first-parent history, 0 = HEAD.
    depth: usize,
    commit_time: i64,
}

fn raw_order(a: &Raw, b: &Raw) -> std::cmp::Ordering {
    (a.commit_time, std::cmp::Reverse(a.depth), &a.change.file_path, &a.change.function_name).cmp(&(
        b.commit_time,
        std::cmp::Reverse(b.depth),
        &b.change.file_path,
        &b.change.function_name,
    ))
}

/// Walk first-parent history from HEAD and filter raw candidates.
///
/// Filters run in a fixed order: test paths, zero delta, duplicate families within
/// `dedupe_window` commits (the most recent survives), then dunder and arity limits.
/// Both output lists are sorted by child commit time, then path, then function name.
pub fn scan_history(
    repo_path: &Path,
    commit_limit: usize,
    filters: &FilterConfig,
) -> Result<ScanResult, MinerError> {
    let repo = GitRepo::open(repo_path)?;
    let repo_name = repo.name();
    let history = repo.first_parent_history(commit_limit)?;

    let mut raw = Vec::new();
    for (depth, commit) in history.iter().enumerate() {
        let Some(parent) = &commit.first_parent else {
            continue;
        };
        let paths: Vec<String> = repo
            .changed_paths(parent, &commit.id)?
            .into_iter()
            .filter(|p| is_python(p))
            .collect();
        let mut parent_tree = FileMap::new();
        let mut child_tree = FileMap::new();
        for p in &paths {
            if let Some(src) = repo.read_file(parent, p) {
                parent_tree.insert(p.clone(), src);
            }
            if let Some(src) = repo.read_file(&commit.id, p) {
                child_tree.insert(p.clone(), src);
            }
        }
        for mut change in diff_commit_pair(&parent_tree, &child_tree) {
            change.repo_name = repo_name.clone();
            change.parent_commit = parent.clone();
            change.child_commit = commit.id.clone();
            raw.push(Raw {
                change,
                depth,
                commit_time: commit.commit_time,
            });
        }
    }
    Ok(apply_filters(raw, filters))
}

fn apply_filters(mut raw: Vec<Raw>, filters: &FilterConfig) -> ScanResult {
    let mut rejected: Vec<(Raw, RejectReason)> = Vec::new();
    // most recent first so duplicate collapse keeps the newest
    raw.sort_by(|a, b| {
        (a.depth, &a.change.file_path, &a.change.function_name).cmp(&(
            b.depth,
            &b.change.file_path,
            &b.change.function_name,
        ))
    });

    let mut survivors = Vec::new();
    for r in raw {
        let c = &r.change;
        if filters.is_test_path(&c.file_path) {
            rejected.push((r, RejectReason::TestPath));
        } else if c.function_name.starts_with("test_") {
            rejected.push((r, RejectReason::TestFunction));
        } else {
            survivors.push(r);
        }
    }

    let (nonzero, zero): (Vec<_>, Vec<_>) = survivors
        .into_iter()
        .partition(|r| r.change.signature_delta > 0);
    rejected.extend(zero.into_iter().map(|r| (r, RejectReason::ZeroDelta)));

    let mut last_kept: HashMap<(String, String), usize> = HashMap::new();
    let mut deduped = Vec::new();
    for r in nonzero {
        let (path, name) = r.change.family();
        let key = (path.to_string(), name.to_string());
        match last_kept.get(&key) {
            Some(&kept_depth) if r.depth.abs_diff(kept_depth) <= filters.dedupe_window => {
                rejected.push((r, RejectReason::DuplicateFamily));
            }
            _ => {
                last_kept.insert(key, r.depth);
                deduped.push(r);
            }
        }
    }

    let mut retained = Vec::new();
    for r in deduped {
        let c = &r.change;
        let name = &c.function_name;
        let arity = c
            .stale_signature
            .parameter_count
            .max(c.current_signature.parameter_count);
        if filters.exclude_dunder && name.len() > 4 && name.starts_with("__") && name.ends_with("__")
        {
            rejected.push((r, RejectReason::Dunder));
        } else if arity > filters.max_arity {
            rejected.push((r, RejectReason::HighArity));
        } else {
            retained.push(r);
        }
    }

    retained.sort_by(raw_order);
    rejected.sort_by(|a, b| raw_order(&a.0, &b.0));
    ScanResult {
        retained: retained.into_iter().map(|r| r.change).collect(),
        rejected: rejected
            .into_iter()
            .map(|(r, reason)| Rejection {
                candidate: r.change,
                reason,
            })
            .collect(),
    }
}
