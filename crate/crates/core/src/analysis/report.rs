//! Markdown rendering of a [`Report`].

use std::fmt::Write;

use super::{AnalysisError, Report, RunAnalysis, CONTRASTS};
use crate::analysis::stats::format_p;
use crate::builder::short_id;
use crate::condition::RetrievalCondition;
use crate::oracle::TaxonomyLabel;

fn interval(bounds: (f64, f64)) -> String {
    format!("[{:.1}%, {:.1}%]", bounds.0 * 100.0, bounds.1 * 100.0)
}

fn short_list(ids: &[String]) -> String {
    if ids.is_empty() {
        return "none".to_string();
    }
    ids.iter()
        .map(|id| format!("`{}`", short_id(id)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn contrast_title(name: &str) -> &'static str {
    match name {
        super::PRIMARY => "Δ primary",
        super::NO_RETRIEVAL => "Δ no-retrieval",
        super::RANK => "Δ rank",
        super::RESCUE_CURRENT_TOP1 => "Rescue (current top-1)",
        super::RESCUE_STALE_TOP1 => "Rescue (stale top-1)",
        _ => "contrast",
    }
}

fn conditions_table(out: &mut String, runs: &[RunAnalysis]) {
    out.push_str("## Condition metrics\n\n");
    out.push_str("| Model | Condition | n | SRR | Pass | Fail-no-match |\n|---|---|---:|---:|---:|---:|\n");
    for run in runs {
        for m in run.metrics.values() {
            let _ = writeln!(
                out,
                "| `{}` | {} | {} | {} | {} | {} |",
                run.model_name, m.condition, m.n, m.srr, m.pass_rate, m.fail_rate
            );
        }
    }
    out.push('\n');
}

fn delta_table(out: &mut String, runs: &[RunAnalysis]) {
    out.push_str("## Stale-reference deltas\n\n| Model |");
    for (name, _, _) in CONTRASTS {
        let _ = write!(out, " {} |", contrast_title(name));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(CONTRASTS.len()));
    out.push('\n');
    for run in runs {
        let _ = write!(out, "| `{}` |", run.model_name);
        for (name, _, _) in CONTRASTS {
            match run.delta(name) {
                Some(d) => {
                    let _ = write!(out, " {d} ({} − {}) |", fraction(d.minuend), fraction(d.subtrahend));
                }
                None => out.push_str(" n/a |"),
            }
        }
        out.push('\n');
    }
    out.push('\n');
    for (name, a, b) in CONTRASTS {
        let _ = writeln!(out, "- {}: SRR `{a}` − SRR `{b}`", contrast_title(name));
    }
    out.push('\n');
}

fn fraction(p: super::Proportion) -> String {
    format!("{}/{}", p.k, p.n)
}

fn tests_table(out: &mut String, runs: &[RunAnalysis]) {
    out.push_str("## Paired exact McNemar tests\n\n");
    out.push_str("Predicate: output is a stale reference. `b` counts samples positive under the first condition only, `c` under the second only.\n\n");
    out.push_str("| Model | Contrast | First | Second | b | c | p |\n|---|---|---|---|---:|---:|---:|\n");
    for run in runs {
        for t in &run.tests {
            let (a, b) = CONTRASTS
                .iter()
                .find(|(n, _, _)| *n == t.contrast)
                .map(|(_, a, b)| (a.as_str(), b.as_str()))
                .unwrap_or(("", ""));
            let _ = writeln!(
                out,
                "| `{}` | {} | {a} | {b} | {} | {} | {} |",
                run.model_name,
                contrast_title(&t.contrast),
                t.discordant_b,
                t.discordant_c,
                format_p(t.p_value)
            );
        }
    }
    out.push('\n');
}

fn interval_table(out: &mut String, runs: &[RunAnalysis]) {
    out.push_str("## Stale-only stale-reference rate\n\n| Model | SRR | Wilson 95% |\n|---|---:|---:|\n");
    for run in runs {
        if let (Some(m), Some(iv)) = (run.metrics.get(&RetrievalCondition::StaleContextOnly), run.stale_only_interval) {
            let _ = writeln!(out, "| `{}` | {} | {} |", run.model_name, m.srr, interval(iv));
        }
    }
    out.push('\n');
}

fn cross_model_section(out: &mut String, report: &Report) {
    let Some(x) = &report.cross_model else {
        return;
    };
    let (a, b) = (&x.model_a, &x.model_b);
    let o = &x.overlap;
    out.push_str("## Cross-model agreement under stale_context_only\n\n| Quantity | Value |\n|---|---:|\n");
    let _ = writeln!(out, "| `{a}` stale-triggering samples | {} |", o.set_a_size);
    let _ = writeln!(out, "| `{b}` stale-triggering samples | {} |", o.set_b_size);
    let _ = writeln!(out, "| Intersection | {} |", o.intersection);
    let _ = writeln!(out, "| Union | {} |", o.union);
    let show = |p: Option<super::Proportion>| p.map_or("undefined".to_string(), |p| p.to_string());
    let _ = writeln!(out, "| Jaccard overlap | {} |", show(o.jaccard));
    let _ = writeln!(
        out,
        "| Wilson 95% interval for Jaccard | {} |",
        x.jaccard_interval.map_or("undefined".to_string(), interval)
    );
    let _ = writeln!(out, "| `{a}` coverage by `{b}` | {} |", show(o.coverage_a_by_b));
    let _ = writeln!(out, "| `{b}` coverage by `{a}` | {} |", show(o.coverage_b_by_a));
    out.push('\n');
    if o.undefined {
        out.push_str("Neither model produced a stale reference, so the overlap is undefined.\n\n");
    }
    let _ = writeln!(out, "- `{a}` only: {}", short_list(&x.a_only));
    let _ = writeln!(out, "- `{b}` only: {}", short_list(&x.b_only));
    let _ = writeln!(out, "- neither: {}\n", short_list(&x.neither));

    let _ = writeln!(
        out,
        "| Repo | n | Both trigger | `{a}` only | `{b}` only | Neither |\n|---|---:|---:|---:|---:|---:|"
    );
    for r in &x.repos {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.repo_name, r.n, r.both, r.a_only, r.b_only, r.neither
        );
    }
    out.push('\n');
}

fn taxonomy_table(out: &mut String, runs: &[RunAnalysis]) {
    let totals: Vec<usize> = runs.iter().map(|r| r.taxonomy.values().sum()).collect();
    let grand: usize = totals.iter().sum();
    out.push_str("## Failure modes of stale-only stale references\n\n| Failure mode |");
    for run in runs {
        let _ = write!(out, " `{}` |", run.model_name);
    }
    out.push_str(" Total |\n|---|");
    out.push_str(&"---:|".repeat(runs.len() + 1));
    out.push('\n');
    for label in TaxonomyLabel::ALL {
        let _ = write!(out, "| {} |", label.title());
        let mut sum = 0;
        for (run, total) in runs.iter().zip(&totals) {
            let k = run.taxonomy.get(&label).copied().unwrap_or(0);
            sum += k;
            let _ = write!(out, " {k}/{total} |");
        }
        let _ = writeln!(out, " {sum}/{grand} |");
    }
    out.push('\n');
}

fn review_flags(out: &mut String, runs: &[RunAnalysis]) {
    out.push_str("## Review flags\n\n");
    let mut any = false;
    for run in runs {
        if !run.all_fail_samples.is_empty() {
            any = true;
            let _ = writeln!(
                out,
                "- `{}`: {} matched neither pattern set under every condition; check for call forms the static oracle does not capture.",
                run.model_name,
                short_list(&run.all_fail_samples)
            );
        }
        if run.excluded_cells > 0 {
            any = true;
            let _ = writeln!(
                out,
                "- `{}`: {} errored or missing cell(s) excluded from denominators.",
                run.model_name, run.excluded_cells
            );
        }
    }
    if !any {
        out.push_str("None.\n");
    }
}

/// Markdown report: condition table, deltas, paired tests, intervals, cross-model agreement,
/// failure modes and review flags. Every rate is shown with its fraction.
pub fn render_report(report: &Report) -> Result<String, AnalysisError> {
    if report.runs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut out = String::from("# Stale-context diagnostic report\n\n");
    for run in &report.runs {
        let _ = writeln!(
            out,
            "- `{}`: {} samples, {} conditions",
            run.model_name,
            run.sample_ids.len(),
            run.metrics.len()
        );
    }
    out.push('\n');
    conditions_table(&mut out, &report.runs);
    delta_table(&mut out, &report.runs);
    tests_table(&mut out, &report.runs);
    interval_table(&mut out, &report.runs);
    cross_model_section(&mut out, report);
    taxonomy_table(&mut out, &report.runs);
    review_flags(&mut out, &report.runs);
    Ok(out)
}
