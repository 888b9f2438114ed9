//! Hard filtering of the accepted-trace pool.

use std::collections::BTreeSet;

use lean_check::detect_incomplete;
use trace_model::{is_lean_language, AgentTrace, TraceEvent};

/// Common proof-closing tactics; a trace whose every query is one of these
/// carries no retrieval signal worth training on.
pub const DEFAULT_TRIVIAL_TACTICS: [&str; 8] =
    ["simp", "linarith", "nlinarith", "ring", "omega", "norm_num", "aesop", "decide"];

pub fn default_trivial_tactics() -> BTreeSet<String> {
    DEFAULT_TRIVIAL_TACTICS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    IncompleteProof,
    NoToolCalls,
    OnlyTrivialQueries,
}

/// First matching drop rule, or None when the trace survives.
pub fn drop_reason(trace: &AgentTrace, trivial_tactics: &BTreeSet<String>) -> Option<DropReason> {
    let incomplete = trace.events().any(|(_, event)| match event {
        TraceEvent::CodeBlock { language, body } => {
            is_lean_language(language) && detect_incomplete(body)
        }
        _ => false,
    });
    if incomplete || trace.final_proof().is_err() {
        return Some(DropReason::IncompleteProof);
    }
    if trace.tool_call_count() == 0 {
        return Some(DropReason::NoToolCalls);
    }
    let queries = trace.queries();
    if !queries.is_empty()
        && queries.iter().all(|q| trivial_tactics.contains(&q.trim().to_lowercase()))
    {
        return Some(DropReason::OnlyTrivialQueries);
    }
    None
}

#[derive(Debug, Default, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FilterCounts {
    pub incomplete_proof: usize,
    pub no_tool_calls: usize,
    pub only_trivial_queries: usize,
}

impl FilterCounts {
    pub fn total(&self) -> usize {
        self.incomplete_proof + self.no_tool_calls + self.only_trivial_queries
    }

    fn record(&mut self, reason: DropReason) {
        match reason {
            DropReason::IncompleteProof => self.incomplete_proof += 1,
            DropReason::NoToolCalls => self.no_tool_calls += 1,
            DropReason::OnlyTrivialQueries => self.only_trivial_queries += 1,
        }
    }
}

pub fn hard_filter<'a>(
    pool: &'a [AgentTrace],
    trivial_tactics: &BTreeSet<String>,
) -> (Vec<&'a AgentTrace>, FilterCounts) {
    let mut kept = Vec::new();
    let mut counts = FilterCounts::default();
    for trace in pool {
        match drop_reason(trace, trivial_tactics) {
            Some(reason) => counts.record(reason),
            None => kept.push(trace),
        }
    }
    (kept, counts)
}
