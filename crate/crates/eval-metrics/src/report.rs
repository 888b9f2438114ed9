//! The aggregated metric report and its plain-text rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregate::{
    build_generative_support, classify_retrieved, retrieval_grounding, select_compiled,
    tool_call_compliance,
};
use crate::passk::benchmark_pass_rate;
use crate::records::GenerationRecord;
use crate::MetricError;

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceCount {
    pub occurrences: usize,
    pub unique: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: usize,
    pub denominator: usize,
}

/// Every reported quantity. Pass rates carry 2 decimals, the share-style
/// percentages 1 decimal, matching how they are rendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pass_at: BTreeMap<u64, f64>,
    pub compliance: f64,
    /// One proof per solved problem (first compiled by sample_index).
    pub grounding: f64,
    /// Alternative reading: every compiled record counted.
    pub grounding_all_compiled: f64,
    pub support_size: usize,
    pub used_total: usize,
    pub out_of_model: OccurrenceCount,
    pub in_model: OccurrenceCount,
    pub pct_out: f64,
    pub solved_with_out: Fraction,
}

pub fn compute_report(
    records: &[GenerationRecord],
    baselines: &[GenerationRecord],
    universe: &BTreeSet<String>,
    ks: &[u64],
) -> Result<MetricReport, MetricError> {
    let mut pass_at = BTreeMap::new();
    for &k in ks {
        pass_at.insert(k, round2(benchmark_pass_rate(records, k)?));
    }
    let compliance = round1(tool_call_compliance(records)?);

    let selected = select_compiled(records);
    let grounding =
        if selected.is_empty() { 0.0 } else { round1(retrieval_grounding(&selected)?) };
    let all_compiled: Vec<&GenerationRecord> = records.iter().filter(|r| r.compiled).collect();
    let grounding_all_compiled =
        if all_compiled.is_empty() { 0.0 } else { round1(retrieval_grounding(&all_compiled)?) };

    let support = build_generative_support(baselines, universe);
    let classification = classify_retrieved(&selected, &support);

    Ok(MetricReport {
        pass_at,
        compliance,
        grounding,
        grounding_all_compiled,
        support_size: support.len(),
        used_total: classification.used_total(),
        out_of_model: OccurrenceCount {
            occurrences: classification.out_occurrences,
            unique: classification.out_unique.len(),
        },
        in_model: OccurrenceCount {
            occurrences: classification.in_occurrences,
            unique: classification.in_unique.len(),
        },
        pct_out: round1(classification.pct_out()),
        solved_with_out: Fraction {
            numerator: classification.solved_with_out.0,
            denominator: classification.solved_with_out.1,
        },
    })
}

impl MetricReport {
    /// Fixed-format table; byte-stable for identical reports.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== Pass rates (percent) ==");
        for (k, rate) in &self.pass_at {
            let _ = writeln!(out, "{:<22}{:.2}", format!("pass@{k}"), rate);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "== Tool behavior (percent) ==");
        let _ = writeln!(out, "{:<22}{:.1}", "compliance", self.compliance);
        let _ = writeln!(out, "{:<22}{:.1}", "grounding", self.grounding);
        let _ = writeln!(out, "{:<22}{:.1}", "grounding (all)", self.grounding_all_compiled);
        let _ = writeln!(out);
        let _ = writeln!(out, "== Retrieved-and-used classification ==");
        let _ = writeln!(out, "{:<22}{}", "generative support", self.support_size);
        let _ = writeln!(out, "{:<22}{}", "retr. & used", self.used_total);
        let _ = writeln!(
            out,
            "{:<22}{} ({} uniq.)",
            "out-of-model", self.out_of_model.occurrences, self.out_of_model.unique
        );
        let _ = writeln!(
            out,
            "{:<22}{} ({} uniq.)",
            "in-model", self.in_model.occurrences, self.in_model.unique
        );
        let _ = writeln!(out, "{:<22}{:.1}%", "out-of-model share", self.pct_out);
        let _ = writeln!(
            out,
            "{:<22}{}/{}",
            "solved with out", self.solved_with_out.numerator, self.solved_with_out.denominator
        );
        out
    }
}
