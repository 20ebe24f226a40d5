//! Builds a throwaway git repository and mines its helper signature changes.
//!
//! ```bash
//! cargo run --example mine_history
//! cargo run --example mine_history -- /path/to/python/repo 200
//! ```

use std::path::Path;
use std::process::Command;

use stalectx::miner::{scan_history, FilterConfig};

fn git(dir: &Path, args: &[&str]) -> Result<(), Box<dyn std::error::Error>> {
    let status = Command::new("git")
        .args(["-c", "user.name=example", "-c", "user.email=example@example.invalid"])
        .args(args)
        .current_dir(dir)
        .status()?;
    if !status.success() {
        return Err(format!("git {args:?} failed").into());
    }
    Ok(())
}

fn commit(dir: &Path, files: &[(&str, &str)], message: &str) -> Result<(), Box<dyn std::error::Error>> {
    for (path, text) in files {
        let full = dir.join(path);
        std::fs::create_dir_all(full.parent().expect("file has a parent"))?;
        std::fs::write(full, text)?;
    }
    git(dir, &["add", "-A"])?;
    git(dir, &["commit", "-q", "-m", message])
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scratch = tempfile::tempdir()?;
    let repo = match args.first() {
        Some(path) => Path::new(path).to_path_buf(),
        None => {
            let dir = scratch.path().join("toolkit");
            std::fs::create_dir_all(&dir)?;
            git(&dir, &["init", "-q"])?;
            commit(&dir, &[("toolkit/text.py", "def wrap(text, width):\n    return text\n\n\ndef pad(text, width):\n    return text\n")], "initial")?;
            commit(&dir, &[("toolkit/text.py", "def wrap(text, width, indent):\n    return text\n\n\ndef pad(width, text):\n    return text\n")], "indent")?;
            commit(&dir, &[("tests/test_text.py", "def check(a, b):\n    pass\n")], "tests")?;
            dir
        }
    };
    let limit = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(500);

    let result = scan_history(&repo, limit, &FilterConfig::default())?;
    for c in &result.retained {
        println!(
            "kept     {}:{} ({}) -> ({}), delta {}",
            c.file_path,
            c.function_name,
            c.stale_signature.parameter_names.join(", "),
            c.current_signature.parameter_names.join(", "),
            c.signature_delta
        );
    }
    for r in &result.rejected {
        println!("rejected {}:{} {:?}", r.candidate.file_path, r.candidate.function_name, r.reason);
    }
    Ok(())
}
