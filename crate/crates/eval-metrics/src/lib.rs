//! Evaluation metrics over proof generations: pass@k, problem-level tool
//! compliance, retrieval grounding, and in-/out-of-model classification of
//! retrieved theorems.

mod aggregate;
mod passk;
mod records;
mod report;

pub use aggregate::{
    build_generative_support, classify_retrieved, retrieval_grounding, select_compiled,
    tool_call_compliance, RetrievalClassification,
};
pub use passk::{benchmark_pass_rate, group_by_problem, pass_at_k};
pub use records::{read_generations_jsonl, write_generations_jsonl, GenerationRecord};
pub use report::{compute_report, round1, round2, Fraction, MetricReport, OccurrenceCount};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("records line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{reason}")]
    Domain { reason: String },
    #[error("problem {problem} has {have} samples, pass@{need} needs at least {need}")]
    InsufficientSamples { problem: String, have: u64, need: u64 },
}
