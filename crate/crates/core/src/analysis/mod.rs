//! Metrics, paired tests and cross-model agreement over result logs.

mod report;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::RetrievalCondition;
use crate::oracle::{CompletionRecord, Outcome, TaxonomyLabel};

pub use report::render_report;
pub use stats::{
    delta, format_p, mcnemar_exact, wilson_interval, PairedTestResult, PointDelta, Proportion, WILSON_Z_95,
};

use RetrievalCondition::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("no result rows to analyze")]
    Empty,
    #[error("no rows for condition {0}")]
    NoRows(RetrievalCondition),
    #[error("rows from more than one model in a single run: {0:?}")]
    MixedModels(Vec<String>),
    #[error("cell {0} / {1} appears more than once")]
    DuplicateCell(String, RetrievalCondition),
    #[error("run for {model} has {errored} errored and {missing} missing cells; pass allow_partial to analyze anyway")]
    PartialRun {
        model: String,
        errored: usize,
        missing: usize,
    },
    #[error("row sets cover different samples")]
    SampleMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub condition: RetrievalCondition,
    pub n: usize,
    pub stale_count: usize,
    pub pass_count: usize,
    pub fail_count: usize,
    pub srr: Proportion,
    pub pass_rate: Proportion,
    pub fail_rate: Proportion,
}

/// Class counts for one condition. Errored rows are skipped.
pub fn condition_metrics(
    rows: &[CompletionRecord],
    condition: RetrievalCondition,
) -> Result<ConditionMetrics, AnalysisError> {
    let mut counts: HashMap<Outcome, usize> = HashMap::new();
    for r in rows.iter().filter(|r| r.condition == condition) {
        if let Some(c) = r.classification {
            *counts.entry(c).or_default() += 1;
        }
    }
    let n: usize = counts.values().sum();
    if n == 0 {
        return Err(AnalysisError::NoRows(condition));
    }
    let get = |o| counts.get(&o).copied().unwrap_or(0);
    let (stale_count, pass_count, fail_count) =
        (get(Outcome::StaleReference), get(Outcome::CurrentMatch), get(Outcome::FailNoMatch));
    Ok(ConditionMetrics {
        condition,
        n,
        stale_count,
        pass_count,
        fail_count,
        srr: Proportion::new(stale_count, n),
        pass_rate: Proportion::new(pass_count, n),
        fail_rate: Proportion::new(fail_count, n),
    })
}

/// McNemar contrast between two conditions, paired by sample id.
///
/// `b` counts samples where the predicate holds under `rows_a` only, `c` under `rows_b` only.
pub fn paired_contrast(
    contrast: &str,
    rows_a: &[&CompletionRecord],
    rows_b: &[&CompletionRecord],
    positive: impl Fn(&CompletionRecord) -> bool,
) -> Result<PairedTestResult, AnalysisError> {
    let a: BTreeMap<&str, bool> = rows_a.iter().map(|r| (r.sample_id.as_str(), positive(r))).collect();
    let b: BTreeMap<&str, bool> = rows_b.iter().map(|r| (r.sample_id.as_str(), positive(r))).collect();
    if a.len() != rows_a.len() || !a.keys().eq(b.keys()) {
        return Err(AnalysisError::SampleMismatch);
    }
    let (mut disc_b, mut disc_c) = (0, 0);
    for (id, &pa) in &a {
        match (pa, b[id]) {
            (true, false) => disc_b += 1,
            (false, true) => disc_c += 1,
            _ => {}
        }
    }
    Ok(PairedTestResult::new(contrast, disc_b, disc_c))
}

pub fn is_stale(r: &CompletionRecord) -> bool {
    r.classification == Some(Outcome::StaleReference)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub set_a_size: usize,
    pub set_b_size: usize,
    pub intersection: usize,
    pub union: usize,
    /// `None` when both sets are empty.
    pub jaccard: Option<Proportion>,
    pub coverage_a_by_b: Option<Proportion>,
    pub coverage_b_by_a: Option<Proportion>,
    pub undefined: bool,
}

pub fn jaccard_overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> OverlapStats {
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    let of = |k: usize, n: usize| (n > 0).then(|| Proportion::new(k, n));
    OverlapStats {
        set_a_size: a.len(),
        set_b_size: b.len(),
        intersection,
        union,
        jaccard: of(intersection, union),
        coverage_a_by_b: of(intersection, a.len()),
        coverage_b_by_a: of(intersection, b.len()),
        undefined: union == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDelta {
    pub name: String,
    pub delta: PointDelta,
}

/// Everything computed from one model's run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAnalysis {
    pub model_name: String,
    pub sample_ids: BTreeSet<String>,
    pub repo_of: BTreeMap<String, String>,
    pub metrics: BTreeMap<RetrievalCondition, ConditionMetrics>,
    pub excluded_cells: usize,
    pub deltas: Vec<NamedDelta>,
    pub tests: Vec<PairedTestResult>,
    /// Wilson interval of the stale-only SRR.
    pub stale_only_interval: Option<(f64, f64)>,
    /// Stale-reference samples under stale-only retrieval.
    pub stale_set: BTreeSet<String>,
    /// Failure-mode counts over stale-only stale references.
    pub taxonomy: BTreeMap<TaxonomyLabel, usize>,
    /// Samples that matched neither pattern under every analyzed condition.
    pub all_fail_samples: Vec<String>,
}

impl RunAnalysis {
    pub fn delta(&self, name: &str) -> Option<PointDelta> {
        self.deltas.iter().find(|d| d.name == name).map(|d| d.delta)
    }

    pub fn test(&self, contrast: &str) -> Option<&PairedTestResult> {
        self.tests.iter().find(|t| t.contrast == contrast)
    }
}

pub const PRIMARY: &str = "primary";
pub const NO_RETRIEVAL: &str = "no_retrieval";
pub const RANK: &str = "rank";
pub const RESCUE_CURRENT_TOP1: &str = "rescue_current_top1";
pub const RESCUE_STALE_TOP1: &str = "rescue_stale_top1";

/// Named contrasts as (name, minuend condition, subtrahend condition).
pub const CONTRASTS: [(&str, RetrievalCondition, RetrievalCondition); 5] = [
    (PRIMARY, StaleContextOnly, CurrentContextOnly),
    (NO_RETRIEVAL, StaleContextOnly, NoRetrieval),
    (RANK, MixedStaleTop1CurrentTop2, MixedCurrentTop1StaleTop2),
    (RESCUE_CURRENT_TOP1, StaleContextOnly, MixedCurrentTop1StaleTop2),
    (RESCUE_STALE_TOP1, StaleContextOnly, MixedStaleTop1CurrentTop2),
];

/// Analyze one run. Without `allow_partial`, any errored or missing cell aborts the analysis;
/// with it, those cells are dropped from every denominator.
pub fn analyze_run(rows: &[CompletionRecord], allow_partial: bool) -> Result<RunAnalysis, AnalysisError> {
    if rows.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let models: BTreeSet<&str> = rows.iter().map(|r| r.model_name.as_str()).collect();
    if models.len() > 1 {
        return Err(AnalysisError::MixedModels(models.into_iter().map(String::from).collect()));
    }
    let model_name = rows[0].model_name.clone();

    let mut cells: BTreeMap<(&str, RetrievalCondition), &CompletionRecord> = BTreeMap::new();
    for r in rows {
        if cells.insert((r.sample_id.as_str(), r.condition), r).is_some() {
            return Err(AnalysisError::DuplicateCell(r.sample_id.clone(), r.condition));
        }
    }
    let sample_ids: BTreeSet<String> = rows.iter().map(|r| r.sample_id.clone()).collect();
    let conditions: BTreeSet<RetrievalCondition> = rows.iter().map(|r| r.condition).collect();
    let errored = rows.iter().filter(|r| r.is_error()).count();
    let missing = sample_ids.len() * conditions.len() - cells.len();
    if (errored > 0 || missing > 0) && !allow_partial {
        return Err(AnalysisError::PartialRun {
            model: model_name,
            errored,
            missing,
        });
    }
    let repo_of = rows
        .iter()
        .map(|r| (r.sample_id.clone(), r.repo_name.clone()))
        .collect();

    let usable: Vec<CompletionRecord> = rows.iter().filter(|r| !r.is_error()).cloned().collect();
    let mut metrics = BTreeMap::new();
    for &c in &conditions {
        if let Ok(m) = condition_metrics(&usable, c) {
            metrics.insert(c, m);
        }
    }

    let by_condition = |c: RetrievalCondition| -> Vec<&CompletionRecord> {
        usable.iter().filter(|r| r.condition == c).collect()
    };
    let mut deltas = Vec::new();
    let mut tests = Vec::new();
    for (name, a, b) in CONTRASTS {
        let (Some(ma), Some(mb)) = (metrics.get(&a), metrics.get(&b)) else {
            continue;
        };
        deltas.push(NamedDelta {
            name: name.to_string(),
            delta: delta(ma.srr, mb.srr),
        });
        let (ra, rb) = (by_condition(a), by_condition(b));
        let shared: BTreeSet<&str> = ra
            .iter()
            .map(|r| r.sample_id.as_str())
            .filter(|id| rb.iter().any(|r| r.sample_id == *id))
            .collect();
        if name != NO_RETRIEVAL {
            let ka: Vec<_> = ra.iter().copied().filter(|r| shared.contains(r.sample_id.as_str())).collect();
            let kb: Vec<_> = rb.iter().copied().filter(|r| shared.contains(r.sample_id.as_str())).collect();
            tests.push(paired_contrast(name, &ka, &kb, is_stale)?);
        }
    }

    let stale_only = by_condition(StaleContextOnly);
    let stale_set: BTreeSet<String> = stale_only
        .iter()
        .filter(|r| is_stale(r))
        .map(|r| r.sample_id.clone())
        .collect();
    let mut taxonomy = BTreeMap::new();
    for r in stale_only.iter().filter(|r| is_stale(r)) {
        if let Some(label) = r.taxonomy_label {
            *taxonomy.entry(label).or_default() += 1;
        }
    }
    let stale_only_interval = metrics
        .get(&StaleContextOnly)
        .map(|m| wilson_interval(m.stale_count, m.n, WILSON_Z_95));

    let all_fail_samples = sample_ids
        .iter()
        .filter(|id| {
            let mut any = false;
            let all_fail = usable.iter().filter(|r| &r.sample_id == *id).all(|r| {
                any = true;
                r.classification == Some(Outcome::FailNoMatch)
            });
            any && all_fail
        })
        .cloned()
        .collect();

    Ok(RunAnalysis {
        model_name,
        sample_ids,
        repo_of,
        metrics,
        excluded_cells: errored + missing,
        deltas,
        tests,
        stale_only_interval,
        stale_set,
        taxonomy,
        all_fail_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoAgreement {
    pub repo_name: String,
    pub n: usize,
    pub both: usize,
    pub a_only: usize,
    pub b_only: usize,
    pub neither: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossModelAnalysis {
    pub model_a: String,
    pub model_b: String,
    pub overlap: OverlapStats,
    pub jaccard_interval: Option<(f64, f64)>,
    pub a_only: Vec<String>,
    pub b_only: Vec<String>,
    pub neither: Vec<String>,
    /// Per repository, then a `Total` row.
    pub repos: Vec<RepoAgreement>,
}

/// Sample-level agreement of two runs over the same dataset under stale-only retrieval.
pub fn cross_model(a: &RunAnalysis, b: &RunAnalysis) -> Result<CrossModelAnalysis, AnalysisError> {
    if a.sample_ids != b.sample_ids {
        return Err(AnalysisError::SampleMismatch);
    }
    let overlap = jaccard_overlap(&a.stale_set, &b.stale_set);
    let jaccard_interval = overlap
        .jaccard
        .map(|j| wilson_interval(j.k, j.n, WILSON_Z_95));

    let mut repos: BTreeMap<&str, RepoAgreement> = BTreeMap::new();
    let (mut a_only, mut b_only, mut neither) = (Vec::new(), Vec::new(), Vec::new());
    for id in &a.sample_ids {
        let repo = a.repo_of.get(id).map(String::as_str).unwrap_or("");
        let row = repos.entry(repo).or_insert_with(|| RepoAgreement {
            repo_name: repo.to_string(),
            n: 0,
            both: 0,
            a_only: 0,
            b_only: 0,
            neither: 0,
        });
        row.n += 1;
        match (a.stale_set.contains(id), b.stale_set.contains(id)) {
            (true, true) => row.both += 1,
            (true, false) => {
                row.a_only += 1;
                a_only.push(id.clone());
            }
            (false, true) => {
                row.b_only += 1;
                b_only.push(id.clone());
            }
            (false, false) => {
                row.neither += 1;
                neither.push(id.clone());
            }
        }
    }
    let mut repos: Vec<RepoAgreement> = repos.into_values().collect();
    let total = repos.iter().fold(
        RepoAgreement {
            repo_name: "Total".into(),
            n: 0,
            both: 0,
            a_only: 0,
            b_only: 0,
            neither: 0,
        },
        |mut t, r| {
            t.n += r.n;
            t.both += r.both;
            t.a_only += r.a_only;
            t.b_only += r.b_only;
            t.neither += r.neither;
            t
        },
    );
    repos.push(total);
    Ok(CrossModelAnalysis {
        model_a: a.model_name.clone(),
        model_b: b.model_name.clone(),
        overlap,
        jaccard_interval,
        a_only,
        b_only,
        neither,
        repos,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunAnalysis>,
    pub cross_model: Option<CrossModelAnalysis>,
}

/// Analyze one or two run logs; two logs also get the cross-model comparison.
pub fn analyze(runs: &[Vec<CompletionRecord>], allow_partial: bool) -> Result<Report, AnalysisError> {
    if runs.is_empty() || runs.iter().all(Vec::is_empty) {
        return Err(AnalysisError::Empty);
    }
    let analyses = runs
        .iter()
        .map(|rows| analyze_run(rows, allow_partial))
        .collect::<Result<Vec<_>, _>>()?;
    let cross_model = match analyses.as_slice() {
        [a, b] => Some(cross_model(a, b)?),
        _ => None,
    };
    Ok(Report {
        runs: analyses,
        cross_model,
    })
}
