//! Cross-model trace distillation.
//!
//! A generalist model runs a retrieval-augmented reasoning loop over Lean
//! problems (stage 1), the tool-use portion of each trajectory is retained
//! (stage 2), a specialist prover regenerates the final proof over that
//! context (stage 3), and candidates are kept only when the proof compiles,
//! is complete, and uses at least one retrieved theorem (stage 4). The
//! pipeline journals per-problem outcomes so interrupted runs resume without
//! re-querying completed problems.

mod baseline;
mod config;
mod pipeline;
mod records;
mod stages;

pub use baseline::{run_baseline, BaselineConfig};
pub use config::{
    CompileSettings, EndpointConfig, PipelineConfig, DEFAULT_MAX_TOOL_ROUNDS,
    DEFAULT_SAMPLES_PER_PROBLEM, DEFAULT_SEARCH_TOP_K, DEFAULT_STATEMENT_CHAR_CAP,
    DEFAULT_WORKERS,
};
pub use pipeline::{run_pipeline, DATASET_FILE, JOURNAL_FILE, MANIFEST_FILE, REJECTS_FILE};
pub use records::{
    append_journal_line, pct, read_journal, read_problems_jsonl, repair_journal, round1, Manifest,
    Problem, ProblemOutcome, RejectReason, RejectRecord, Stage, StageRecord, Stage1Stats,
    Stage3Stats,
};
pub use stages::{
    execute_tool_call, extract_agentic_prefix, filter_trace, generate_agentic_trace,
    regenerate_proof, Candidate, CandidateFailure, StageDeps, StageFailure,
};

#[derive(Debug, thiserror::Error)]
pub enum DistillError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path} line {line}: {reason}")]
    Line { path: String, line: usize, reason: String },
    #[error("duplicate problem id: {0}")]
    DuplicateProblem(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// The trace executed zero tool calls, so there is no prefix to retain.
    #[error("trace has no tool use")]
    NoToolUse,
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("model endpoint: {0}")]
    Client(String),
    #[error("checker: {0}")]
    Checker(String),
}
