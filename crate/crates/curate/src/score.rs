//! Quality scores: how many retrieved theorems the proof actually uses, how
//! diverse the queries are, and how deep the tool interaction goes.

use std::collections::{BTreeSet, HashSet};

use lean_check::{extract_identifiers, identifier_counts};
use trace_model::AgentTrace;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, gamma: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceScore {
    pub used_count: usize,
    /// 1 - mean pairwise Jaccard similarity of query token sets; 1.0 for a
    /// single query.
    pub diversity: f64,
    /// Tool call count.
    pub depth: usize,
    pub weight: f64,
}

fn query_tokens(query: &str) -> BTreeSet<String> {
    query
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        // Two empty token sets are identical queries.
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// 1 - mean pairwise Jaccard similarity; single (or no) query scores 1.0.
pub fn query_diversity(queries: &[String]) -> f64 {
    if queries.len() < 2 {
        return 1.0;
    }
    let tokens: Vec<BTreeSet<String>> = queries.iter().map(|q| query_tokens(q)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            total += jaccard(&tokens[i], &tokens[j]);
            pairs += 1;
        }
    }
    1.0 - total / pairs as f64
}

/// Scores a trace given the identifiers present in its final proof.
pub fn score_trace(
    trace: &AgentTrace,
    proof_identifiers: &BTreeSet<String>,
    weights: &ScoreWeights,
) -> TraceScore {
    let retrieved = trace.retrieved_theorem_names();
    let used_count = proof_identifiers.iter().filter(|n| retrieved.contains(*n)).count();
    let diversity = query_diversity(&trace.queries());
    let depth = trace.tool_call_count();
    TraceScore {
        used_count,
        diversity,
        depth,
        weight: weights.alpha * used_count as f64
            + weights.beta * diversity
            + weights.gamma * depth as f64,
    }
}

/// Extracts the proof identifiers (against the trace's own retrieved names)
/// and scores. Traces that passed the hard filter always have a final proof.
pub fn score_trace_auto(trace: &AgentTrace, weights: &ScoreWeights) -> TraceScore {
    let universe: HashSet<String> = trace.retrieved_theorem_names().into_iter().collect();
    let proof_identifiers = match trace.final_proof() {
        Ok(proof) => extract_identifiers(&proof.source, &universe),
        Err(_) => BTreeSet::new(),
    };
    score_trace(trace, &proof_identifiers, weights)
}

/// The namespace the trace counts against: namespace of the most-used
/// retrieved theorem in the final proof, ties broken by name. With no usable
/// proof or no retrieved names the namespace is empty.
pub fn primary_namespace(trace: &AgentTrace) -> String {
    let retrieved = trace.retrieved_theorem_names();
    if retrieved.is_empty() {
        return String::new();
    }
    let universe: HashSet<String> = retrieved.iter().cloned().collect();
    let counts = match trace.final_proof() {
        Ok(proof) => identifier_counts(&proof.source, &universe),
        Err(_) => Default::default(),
    };
    // BTreeSet iteration is name-ascending, and a strictly-greater count is
    // required to displace the incumbent, so ties resolve to the first name.
    let mut best: Option<(&String, usize)> = None;
    for name in &retrieved {
        let count = counts.get(name).copied().unwrap_or(0);
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((name, count));
        }
    }
    namespace_of(best.expect("retrieved nonempty").0)
}

/// Everything before the last '.'-separated segment.
pub fn namespace_of(name: &str) -> String {
    match name.rfind('.') {
        Some(pos) => name[..pos].to_string(),
        None => String::new(),
    }
}
