//! Problem-level aggregates: compliance, grounding, generative support, and
//! in-/out-of-model classification of retrieved-and-used theorems.

use std::collections::BTreeSet;

use lean_check::extract_identifiers;

use crate::passk::group_by_problem;
use crate::records::GenerationRecord;
use crate::MetricError;

/// Percentage of problems where at least one sample executed a tool call.
pub fn tool_call_compliance(records: &[GenerationRecord]) -> Result<f64, MetricError> {
    let groups = group_by_problem(records);
    if groups.is_empty() {
        return Err(MetricError::Domain { reason: "no records".into() });
    }
    let hits = groups
        .iter()
        .filter(|(_, group)| group.iter().any(|r| r.tool_call_executed))
        .count();
    Ok(hits as f64 / groups.len() as f64 * 100.0)
}

/// The compiled proof analyzed for each solved problem: lowest sample_index
/// among that problem's compiled samples. Problems with no compiled sample
/// are absent. Output order follows first appearance in the input.
pub fn select_compiled(records: &[GenerationRecord]) -> Vec<&GenerationRecord> {
    group_by_problem(records)
        .into_iter()
        .filter_map(|(_, group)| {
            group.into_iter().filter(|r| r.compiled).min_by_key(|r| r.sample_index)
        })
        .collect()
}

/// Percentage of the given compiled proofs that use at least one retrieved
/// theorem. Callers pass either one proof per solved problem
/// (select_compiled) or every compiled record.
pub fn retrieval_grounding(compiled: &[&GenerationRecord]) -> Result<f64, MetricError> {
    if compiled.is_empty() {
        return Err(MetricError::Domain { reason: "no compiled records".into() });
    }
    if let Some(bad) = compiled.iter().find(|r| !r.compiled) {
        return Err(MetricError::Domain {
            reason: format!("grounding input must be compiled, {} is not", bad.problem_id),
        });
    }
    let grounded = compiled.iter().filter(|r| r.is_grounded()).count();
    Ok(grounded as f64 / compiled.len() as f64 * 100.0)
}

/// Identifiers the model produces without tool access: the union over every
/// baseline generation, compiled or not.
pub fn build_generative_support(
    baselines: &[GenerationRecord],
    universe: &BTreeSet<String>,
) -> BTreeSet<String> {
    let universe: std::collections::HashSet<String> = universe.iter().cloned().collect();
    let mut support = BTreeSet::new();
    for record in baselines {
        support.extend(extract_identifiers(&record.proof_source, &universe));
    }
    support
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RetrievalClassification {
    pub out_occurrences: usize,
    pub out_unique: BTreeSet<String>,
    pub in_occurrences: usize,
    pub in_unique: BTreeSet<String>,
    /// Solved problems whose selected proof uses at least one out-of-model
    /// name, over all solved problems.
    pub solved_with_out: (usize, usize),
}

impl RetrievalClassification {
    pub fn used_total(&self) -> usize {
        self.out_occurrences + self.in_occurrences
    }

    pub fn pct_out(&self) -> f64 {
        if self.used_total() == 0 {
            0.0
        } else {
            self.out_occurrences as f64 / self.used_total() as f64 * 100.0
        }
    }
}

/// Classifies each retrieved-and-used occurrence in the selected proofs.
/// An occurrence is one (problem, identifier) pair; a name is in-model when
/// the generative support contains it.
pub fn classify_retrieved(
    selected: &[&GenerationRecord],
    support: &BTreeSet<String>,
) -> RetrievalClassification {
    let mut result = RetrievalClassification {
        out_occurrences: 0,
        out_unique: BTreeSet::new(),
        in_occurrences: 0,
        in_unique: BTreeSet::new(),
        solved_with_out: (0, selected.len()),
    };
    for record in selected {
        let mut has_out = false;
        for name in record.retrieved_and_used() {
            if support.contains(&name) {
                result.in_occurrences += 1;
                result.in_unique.insert(name);
            } else {
                result.out_occurrences += 1;
                result.out_unique.insert(name);
                has_out = true;
            }
        }
        if has_out {
            result.solved_with_out.0 += 1;
        }
    }
    result
}
