//! End-to-end curation: filter, score, plan, sample, report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use trace_model::AgentTrace;

use crate::filter::{hard_filter, FilterCounts};
use crate::sample::{plan_targets, stratified_sample, Candidate, SamplePlan, Stratum};
use crate::score::{primary_namespace, score_trace_auto, ScoreWeights, TraceScore};
use crate::CurateError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationConfig {
    pub n_total: usize,
    pub seed: u64,
    /// Max selected traces per primary namespace; usize::MAX disables.
    pub namespace_cap: usize,
    pub weights: ScoreWeights,
    pub trivial_tactics: BTreeSet<String>,
    /// Explicit per-stratum targets; None derives proportional targets.
    pub strata_override: Option<BTreeMap<Stratum, usize>>,
}

impl CurationConfig {
    pub fn new(n_total: usize, seed: u64) -> Self {
        Self {
            n_total,
            seed,
            namespace_cap: usize::MAX,
            weights: ScoreWeights::default(),
            trivial_tactics: crate::filter::default_trivial_tactics(),
            strata_override: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationReport {
    pub pool_size: usize,
    pub dropped: FilterCounts,
    pub eligible: usize,
    pub strata_pool: BTreeMap<Stratum, usize>,
    pub strata_targets: BTreeMap<Stratum, usize>,
    pub strata_selected: BTreeMap<Stratum, usize>,
    pub namespace_selected: BTreeMap<String, usize>,
    pub selected: usize,
    pub shortfall: usize,
    pub seed: u64,
}

pub struct CurationOutcome<'a> {
    /// Selected traces in canonical problem_id order.
    pub selected: Vec<&'a AgentTrace>,
    pub scores: BTreeMap<String, TraceScore>,
    pub report: CurationReport,
}

pub fn curate<'a>(
    pool: &'a [AgentTrace],
    config: &CurationConfig,
) -> Result<CurationOutcome<'a>, CurateError> {
    let (kept, dropped) = hard_filter(pool, &config.trivial_tactics);

    let mut scores: BTreeMap<String, TraceScore> = BTreeMap::new();
    let mut candidates: Vec<Candidate> = Vec::with_capacity(kept.len());
    let mut strata_pool: BTreeMap<Stratum, usize> =
        Stratum::ALL.iter().map(|s| (*s, 0)).collect();
    for trace in &kept {
        let score = score_trace_auto(trace, &config.weights);
        let stratum = Stratum::of_depth(score.depth)
            .expect("hard filter drops traces without tool calls");
        *strata_pool.get_mut(&stratum).expect("all strata present") += 1;
        scores.insert(trace.problem_id.clone(), score);
        candidates.push(Candidate {
            problem_id: trace.problem_id.clone(),
            stratum,
            namespace: primary_namespace(trace),
            weight: score.weight,
        });
    }

    let strata_targets = match &config.strata_override {
        Some(targets) => {
            let total: usize = targets.values().sum();
            if total != config.n_total {
                return Err(CurateError::PlanShape {
                    reason: format!(
                        "strata targets sum to {total}, n_total is {}",
                        config.n_total
                    ),
                });
            }
            let available: usize = strata_pool.values().sum();
            if config.n_total > available {
                return Err(CurateError::InfeasiblePlan {
                    requested: config.n_total,
                    available,
                });
            }
            targets.clone()
        }
        None => plan_targets(&strata_pool, config.n_total)?,
    };

    let plan = SamplePlan {
        n_total: config.n_total,
        strata: strata_targets.clone(),
        namespace_cap: config.namespace_cap,
        seed: config.seed,
    };
    let outcome = stratified_sample(&candidates, &plan)?;

    let by_id: BTreeMap<&str, &'a AgentTrace> =
        kept.iter().map(|t| (t.problem_id.as_str(), *t)).collect();
    let selected: Vec<&'a AgentTrace> =
        outcome.selected.iter().map(|id| by_id[id.as_str()]).collect();

    let report = CurationReport {
        pool_size: pool.len(),
        dropped,
        eligible: kept.len(),
        strata_pool,
        strata_targets,
        strata_selected: outcome.per_stratum,
        namespace_selected: outcome.per_namespace,
        selected: selected.len(),
        shortfall: outcome.shortfall,
        seed: config.seed,
    };
    Ok(CurationOutcome { selected, scores, report })
}
