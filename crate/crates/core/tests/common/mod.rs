//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

use stalectx::builder::{build_sample, DiagnosticSample};
use stalectx::miner::{diff_commit_pair, FileMap, SignatureChange};
use stalectx::oracle::TaxonomyLabel;

/// (path, helper, stale parameters, current parameters)
const SYNTHETIC_HELPERS: [(&str, &str, &str, &str); 10] = [
    ("layout/columns.py", "align_columns", "rows, width", "rows, width, fill"),
    ("layout/columns.py", "wrap_cells", "cells, width, margin", "cells, width"),
    ("io/paths.py", "join_segments", "base, parts", "base, parts, sep, normalize"),
    ("io/paths.py", "split_suffix", "name, suffixes, strict", "name"),
    ("net/retry.py", "backoff_delay", "attempt", "attempt, base, cap"),
    ("net/retry.py", "should_retry", "status, method, attempt", "status, attempt"),
    ("text/escape.py", "escape_markup", "text, quote", "text, quote, entities"),
    ("text/escape.py", "strip_controls", "text, keep_tabs, keep_newlines", "text, keep_newlines"),
    ("cli/options.py", "parse_flag", "token", "token, negatable"),
    ("cli/options.py", "format_usage", "prog, options, width", "prog, options"),
];

fn source(helper: &str, params: &str) -> String {
    let first = params.split(',').next().unwrap_or("None").trim();
    format!(
        "import os\n\n\ndef {helper}({params}):\n    \"\"\"Return the {helper} result.\"\"\"\n    value = {first}\n    return value\n"
    )
}

pub fn commit_id(label: &str) -> String {
    hex::encode(Sha256::digest(label.as_bytes()))[..40].to_string()
}

/// One signature change per helper, with realistic commit ids.
pub fn synthesized_changes() -> Vec<SignatureChange> {
    SYNTHETIC_HELPERS
        .iter()
        .enumerate()
        .map(|(i, (path, helper, stale, current))| {
            let parent = FileMap::from([(path.to_string(), source(helper, stale))]);
            let child = FileMap::from([(path.to_string(), source(helper, current))]);
            let mut change = diff_commit_pair(&parent, &child).pop().expect("fixture differs");
            change.repo_name = "toolkit".to_string();
            change.parent_commit = commit_id(&format!("parent-{i}"));
            change.child_commit = commit_id(&format!("child-{i}"));
            change
        })
        .collect()
}

/// Ten samples, `sig-101` to `sig-110`.
pub fn synthesized_samples() -> Vec<DiagnosticSample> {
    synthesized_changes()
        .iter()
        .enumerate()
        .map(|(i, c)| build_sample(c, 101 + i).expect("fixture builds"))
        .collect()
}

fn fixture_sample(helper: &str, stale: &str, current: &str, seq: usize) -> DiagnosticSample {
    let path = "pkg/cells.py";
    let parent = FileMap::from([(path.to_string(), source(helper, stale))]);
    let child = FileMap::from([(path.to_string(), source(helper, current))]);
    let mut change = diff_commit_pair(&parent, &child).pop().expect("fixture differs");
    change.repo_name = "fixture".to_string();
    change.parent_commit = commit_id("fixture-parent");
    change.child_commit = commit_id("fixture-child");
    build_sample(&change, seq).expect("fixture builds")
}

/// One sample and stale output per failure mode: a shorter stale call, a longer stale call,
/// and a local redefinition of the stale helper.
pub fn taxonomy_fixtures() -> Vec<(DiagnosticSample, String, TaxonomyLabel)> {
    let shorter = fixture_sample("chop_cells", "text, width", "text, width, position", 201);
    let longer = fixture_sample("null_pager", "stream, generator, color", "stream, color", 202);
    let redefined = fixture_sample("temp_pager", "generator, cmd, color, encoding", "generator, cmd, color", 203);
    vec![
        (
            shorter,
            "```python\ndef invoke_target(text, width, position):\n    return chop_cells(text, width)\n```".to_string(),
            TaxonomyLabel::NewArgumentOmitted,
        ),
        (
            longer,
            "```python\ndef invoke_target(stream, color, generator):\n    return null_pager(stream, generator, color)\n```"
                .to_string(),
            TaxonomyLabel::ObsoleteArgumentRetained,
        ),
        (
            redefined,
            "```python\ndef temp_pager(generator, cmd, color, encoding):\n    raise NotImplementedError\n\n\ndef invoke_target(generator, cmd, color, encoding):\n    return temp_pager(generator, cmd, color, encoding)\n```"
                .to_string(),
            TaxonomyLabel::StaleHelperReconstruction,
        ),
    ]
}

fn git(repo: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new("git")
        .args(["-c", "user.name=fixture", "-c", "user.email=fixture@example.invalid", "-c", "commit.gpgsign=false"])
        .args(args)
        .current_dir(repo)
        .output()
        .map_err(|e| format!("git: {e}"))?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("git {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

pub fn git_init(repo: &Path) -> Result<(), String> {
    std::fs::create_dir_all(repo).map_err(|e| e.to_string())?;
    git(repo, &["init", "-q"])
}

pub fn git_commit(repo: &Path, files: &[(&str, String)], message: &str) -> Result<(), String> {
    for (path, text) in files {
        let full = repo.join(path);
        std::fs::create_dir_all(full.parent().expect("relative path")).map_err(|e| e.to_string())?;
        std::fs::write(&full, text).map_err(|e| e.to_string())?;
    }
    git(repo, &["add", "-A"])?;
    git(repo, &["commit", "-q", "-m", message])
}
