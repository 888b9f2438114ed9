//! Trace curation: hard filters, quality weighting, and stratified
//! namespace-capped subsampling of accepted proof traces.

mod filter;
mod pipeline;
mod sample;
mod score;

pub use filter::{
    default_trivial_tactics, drop_reason, hard_filter, DropReason, FilterCounts,
    DEFAULT_TRIVIAL_TACTICS,
};
pub use pipeline::{curate, CurationConfig, CurationOutcome, CurationReport};
pub use sample::{
    plan_targets, stratified_sample, Candidate, SampleOutcome, SamplePlan, Stratum,
};
pub use score::{
    namespace_of, primary_namespace, query_diversity, score_trace, score_trace_auto,
    ScoreWeights, TraceScore,
};

#[derive(Debug, thiserror::Error)]
pub enum CurateError {
    #[error("plan requests {requested} traces, pool holds {available}")]
    InfeasiblePlan { requested: usize, available: usize },
    #[error("invalid plan: {reason}")]
    PlanShape { reason: String },
    #[error("duplicate problem id {problem} in pool")]
    DuplicateProblem { problem: String },
    #[error("candidate {problem} has non-positive weight {weight}")]
    WeightDomain { problem: String, weight: f64 },
}
