mod common;

use std::path::Path;
use std::process::{Command, Output};

use stalectx::builder::DiagnosticSample;
use stalectx::jsonl;
use stalectx::miner::{Rejection, SignatureChange};
use stalectx::oracle::CompletionRecord;
use stalectx::reference::{evaluation_samples, script_for, GPT, QWEN};

fn stalectx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stalectx"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn mine_then_curate_builds_samples() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("lib");
    common::git_init(&repo).unwrap();
    common::git_commit(&repo, &[("lib/fmt.py", "def pad(text, width):\n    return text\n".into())], "one").unwrap();
    common::git_commit(&repo, &[("lib/fmt.py", "def pad(text, width, fill):\n    return text\n".into())], "two").unwrap();

    ok(&stalectx(&["mine", "--repo", "lib", "--out", "cands.jsonl", "--reject-log", "rejects.jsonl"], dir.path()));
    let cands: Vec<SignatureChange> = jsonl::read(&dir.path().join("cands.jsonl")).unwrap();
    let rejects: Vec<Rejection> = jsonl::read(&dir.path().join("rejects.jsonl")).unwrap();
    assert_eq!(cands.len(), 1);
    assert!(rejects.is_empty());
    assert_eq!(cands[0].signature_delta, 1);

    ok(&stalectx(&["curate", "--candidates", "cands.jsonl", "--out", "samples.jsonl"], dir.path()));
    let samples: Vec<DiagnosticSample> = jsonl::read(&dir.path().join("samples.jsonl")).unwrap();
    assert_eq!(samples.len(), 1);
    assert_eq!(samples[0].canonical_current_call(), "pad(text, width, fill)");
}

#[test]
fn render_audit_run_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (samples, _) = evaluation_samples();
    jsonl::write(&dir.path().join("samples.jsonl"), &samples).unwrap();
    for (model, file) in [(QWEN, "qwen.json"), (GPT, "gpt.json")] {
        std::fs::write(dir.path().join(file), serde_json::to_string(&script_for(model, &samples)).unwrap()).unwrap();
    }

    ok(&stalectx(&["render", "--samples", "samples.jsonl", "--out", "render"], dir.path()));
    ok(&stalectx(&["audit", "--prompts", "render/prompts", "--report", "audit.jsonl"], dir.path()));

    // a lexicon that flags the template's own wording fails the audit
    std::fs::write(dir.path().join("strict.txt"), "repository helper\n").unwrap();
    let strict = stalectx(
        &["audit", "--prompts", "render/prompts", "--lexicon", "strict.txt", "--report", "strict.jsonl"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(1));

    for (file, out) in [("qwen.json", "run-qwen"), ("gpt.json", "run-gpt")] {
        ok(&stalectx(&["run", "--samples", "samples.jsonl", "--mock-script", file, "--out", out], dir.path()));
    }
    let rows: Vec<CompletionRecord> = jsonl::read(&dir.path().join("run-qwen/results.jsonl")).unwrap();
    assert_eq!(rows.len(), 85);

    let again = stalectx(&["run", "--samples", "samples.jsonl", "--mock-script", "qwen.json", "--out", "run-qwen"], dir.path());
    assert_eq!(again.status.code(), Some(2));
    ok(&stalectx(
        &["run", "--samples", "samples.jsonl", "--mock-script", "qwen.json", "--out", "run-qwen", "--resume"],
        dir.path(),
    ));

    ok(&stalectx(
        &["analyze", "--runs", "run-qwen/results.jsonl", "run-gpt/results.jsonl", "--report", "report.md"],
        dir.path(),
    ));
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("88.2 pp (15/17 − 0/17)"), "{report}");
    assert!(report.contains("76.5 pp (13/17 − 0/17)"), "{report}");
}

#[test]
fn run_requires_a_client() {
    let dir = tempfile::tempdir().unwrap();
    jsonl::write(&dir.path().join("samples.jsonl"), &evaluation_samples().0).unwrap();
    let out = stalectx(&["run", "--samples", "samples.jsonl", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--endpoint or --mock-script"));
}
