//! Thin wrapper over the `git` command line.

use std::path::{Path, PathBuf};
use std::process::Command;

use super::MinerError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitInfo {
    pub id: String,
    pub first_parent: Option<String>,
    pub commit_time: i64,
}

#[derive(Debug, Clone)]
pub struct GitRepo {
    path: PathBuf,
}

impl GitRepo {
    pub fn open(path: &Path) -> Result<Self, MinerError> {
        let unreadable = || MinerError::RepoUnreadable(path.display().to_string());
        if !path.is_dir() {
            return Err(unreadable());
        }
        let repo = GitRepo {
            path: path.to_path_buf(),
        };
        let inside = repo
            .git(&["rev-parse", "--is-inside-work-tree"])
            .map_err(|_| unreadable())?;
        if inside.trim() != "true" {
            return Err(unreadable());
        }
        Ok(repo)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Repository name as the final component of the top-level directory.
    pub fn name(&self) -> String {
        self.git(&["rev-parse", "--show-toplevel"])
            .ok()
            .and_then(|top| {
                Path::new(top.trim())
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
            })
            .unwrap_or_else(|| "repo".to_string())
    }

    fn git(&self, args: &[&str]) -> Result<String, MinerError> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(args)
            .output()
            .map_err(|e| MinerError::Git(e.to_string()))?;
        if !out.status.success() {
            return Err(MinerError::Git(
                String::from_utf8_lossy(&out.stderr).trim().to_string(),
            ));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    /// Up to `limit` commits along first-parent history from HEAD, newest first.
    pub fn first_parent_history(&self, limit: usize) -> Result<Vec<CommitInfo>, MinerError> {
        if limit == 0 {
            return Err(MinerError::InvalidCommitRange(
                "commit limit must be positive".into(),
            ));
        }
        let log = self
            .git(&[
                "log",
                "--first-parent",
                &format!("--max-count={limit}"),
                "--format=%H %ct %P",
                "HEAD",
            ])
            .map_err(|e| MinerError::InvalidCommitRange(e.to_string()))?;
        log.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let mut parts = line.split_whitespace();
                let id = parts.next().unwrap_or_default().to_string();
                let commit_time = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| MinerError::Git(format!("malformed log line: {line}")))?;
                let first_parent = parts.next().map(str::to_string);
                Ok(CommitInfo {
                    id,
                    first_parent,
                    commit_time,
                })
            })
            .collect()
    }

    /// Paths that differ between two commits, renames reported as delete + add.
    pub fn changed_paths(&self, parent: &str, child: &str) -> Result<Vec<String>, MinerError> {
        let out = self.git(&[
            "diff-tree",
            "-r",
            "--name-only",
            "--no-renames",
            "-z",
            parent,
            child,
        ])?;
        Ok(out
            .split('\0')
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect())
    }

    /// File contents at a commit; `None` if the path does not exist there or is not UTF-8.
    pub fn read_file(&self, commit: &str, path: &str) -> Option<String> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["show", &format!("{commit}:{path}")])
            .output()
            .ok()?;
        if !out.status.success() {
            return None;
        }
        String::from_utf8(out.stdout).ok()
    }
}
