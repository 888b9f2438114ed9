//! Pipeline configuration: two model endpoints, the retrieval service, the
//! checker, and the loop budgets.

use std::path::PathBuf;
use std::time::Duration;

use lean_check::{CompileBackend, CompilerConfig};
use model_client::RetryPolicy;

use crate::DistillError;

pub const DEFAULT_MAX_TOOL_ROUNDS: usize = 6;
pub const DEFAULT_SAMPLES_PER_PROBLEM: usize = 4;
pub const DEFAULT_SEARCH_TOP_K: usize = 5;
pub const DEFAULT_STATEMENT_CHAR_CAP: usize = 600;
pub const DEFAULT_WORKERS: usize = 4;

/// One chat-completion endpoint plus its sampling knobs.
#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone)]
pub struct CompileSettings {
    pub backend: CompileBackend,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub timeout: Duration,
}

impl CompileSettings {
    pub fn to_compiler_config(&self) -> CompilerConfig {
        CompilerConfig {
            backend: self.backend.clone(),
            cache_dir: self.cache_dir.clone(),
            concurrency: self.concurrency,
            timeout: self.timeout,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Generalist model driving the tool loop.
    pub generalist: EndpointConfig,
    /// Specialist model regenerating final proofs over extracted prefixes.
    pub specialist: EndpointConfig,
    /// Base URL of the retrieval service.
    pub search_url: String,
    pub search_top_k: usize,
    /// Assistant turns allowed in the tool loop; each turn may carry calls.
    pub max_tool_rounds: usize,
    /// Specialist completions drawn per prefix.
    pub samples_per_problem: usize,
    /// Per-theorem formal statement cap inside tool responses.
    pub statement_char_cap: usize,
    pub compile: CompileSettings,
    /// Problems processed concurrently.
    pub workers: usize,
    /// Retry schedule for both model endpoints.
    pub retry: RetryPolicy,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), DistillError> {
        if self.max_tool_rounds < 1 {
            return Err(DistillError::InvalidConfig("max_tool_rounds must be at least 1".into()));
        }
        if self.samples_per_problem < 1 {
            return Err(DistillError::InvalidConfig(
                "samples_per_problem must be at least 1".into(),
            ));
        }
        if self.search_top_k < 1 || self.search_top_k > 100 {
            return Err(DistillError::InvalidConfig(
                "search_top_k must lie in 1..=100".into(),
            ));
        }
        if self.statement_char_cap < 1 {
            return Err(DistillError::InvalidConfig(
                "statement_char_cap must be at least 1".into(),
            ));
        }
        if self.workers < 1 {
            return Err(DistillError::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}
