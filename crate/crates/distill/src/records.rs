//! Input problems, per-problem outcome records, the append-only journal,
//! and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use trace_model::TraceRecord;

use crate::DistillError;

/// One theorem to prove.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub problem_id: String,
    pub statement: String,
}

pub fn read_problems_jsonl(path: &Path) -> Result<Vec<Problem>, DistillError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem = serde_json::from_str(&line).map_err(|e| DistillError::Line {
            path: path.display().to_string(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if !seen.insert(problem.problem_id.clone()) {
            return Err(DistillError::DuplicateProblem(problem.problem_id));
        }
        problems.push(problem);
    }
    Ok(problems)
}

/// How far a problem has progressed; journal entries only carry the two
/// terminal stages.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generated,
    PrefixExtracted,
    Regenerated,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    CompileFailure,
    NoGrounding,
    ProtocolError,
    BudgetExhausted,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::CompileFailure => "compile_failure",
            RejectReason::NoGrounding => "no_grounding",
            RejectReason::ProtocolError => "protocol_error",
            RejectReason::BudgetExhausted => "budget_exhausted",
        }
    }

    /// Cross-candidate rank, lower is closer to acceptance. A candidate that
    /// compiled but missed grounding got further than one that failed to
    /// compile, which got further than one that broke protocol.
    pub fn rank(&self) -> u8 {
        match self {
            RejectReason::NoGrounding => 0,
            RejectReason::CompileFailure => 1,
            RejectReason::ProtocolError => 2,
            RejectReason::BudgetExhausted => 3,
        }
    }
}

/// Terminal grading result for one problem.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageRecord {
    pub problem_id: String,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
    /// Output file the trace landed in, when one did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
}

/// Everything the journal needs to reconstruct outputs for one problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub record: StageRecord,
    /// Accepted: the final trace. Rejected: the best-graded candidate trace,
    /// when one parsed at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceRecord>,
    /// Free-text failure detail, e.g. the protocol violation description.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Whether the generalist trace's own final proof compiled. Absent when
    /// the trace carried no final proof.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage1_compiled: Option<bool>,
    pub stage1_tool_calls: usize,
    /// Specialist completions received (protocol failures included).
    pub stage3_candidates: usize,
    pub stage3_compiled: usize,
}

/// Reads the journal, tolerating a torn final line (a crash mid-append).
/// A malformed interior line means real corruption and is a hard error.
pub fn read_journal(path: &Path) -> Result<Vec<ProblemOutcome>, DistillError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let mut outcomes = Vec::new();
    let last = lines.len();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ProblemOutcome>(line) {
            Ok(outcome) => outcomes.push(outcome),
            Err(_) if idx + 1 == last => {
                tracing::warn!(line = idx + 1, "dropping torn final journal line");
                return Ok(outcomes);
            }
            Err(e) => {
                return Err(DistillError::Line {
                    path: path.display().to_string(),
                    line: idx + 1,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(outcomes)
}

/// Reads the journal like [`read_journal`], then repairs crash damage in
/// place: a torn final line is truncated away and a missing trailing newline
/// is restored, so later appends start at a clean line boundary.
pub fn repair_journal(path: &Path) -> Result<Vec<ProblemOutcome>, DistillError> {
    let text = std::fs::read_to_string(path)?;
    let mut outcomes = Vec::new();
    let mut keep = 0usize;
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut missing_newline = false;
    for line in text.split_inclusive('\n') {
        line_no += 1;
        offset += line.len();
        let complete = line.ends_with('\n');
        let body = line.trim();
        if body.is_empty() {
            if complete {
                keep = offset;
            }
            continue;
        }
        match serde_json::from_str::<ProblemOutcome>(body) {
            Ok(outcome) => {
                outcomes.push(outcome);
                if complete {
                    keep = offset;
                } else {
                    missing_newline = true;
                }
            }
            Err(_) if offset == text.len() => {
                tracing::warn!(line = line_no, "dropping torn final journal line");
            }
            Err(e) => {
                return Err(DistillError::Line {
                    path: path.display().to_string(),
                    line: line_no,
                    reason: e.to_string(),
                });
            }
        }
    }
    if missing_newline {
        let mut file = OpenOptions::new().append(true).open(path)?;
        file.write_all(b"\n")?;
    } else if keep < text.len() {
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(keep as u64)?;
    }
    Ok(outcomes)
}

pub fn append_journal_line(path: &Path, outcome: &ProblemOutcome) -> Result<(), DistillError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(outcome).map_err(|e| DistillError::InvalidConfig(e.to_string()))?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Stage1Stats {
    /// Traces the generalist produced (problems that reached grading).
    pub generated: usize,
    pub with_tool_use: usize,
    /// Traces whose final assistant message carried a proof.
    pub proofs: usize,
    pub proofs_compiled: usize,
    /// proofs_compiled / generated, in percent.
    pub compile_rate_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Stage3Stats {
    /// Specialist completions received across all problems.
    pub candidates: usize,
    pub compiled: usize,
    /// compiled / candidates, in percent.
    pub compile_rate_pct: f64,
    /// Problems with at least one compiling candidate.
    pub problems_with_compiled: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub problems_total: usize,
    /// Problems that reached a terminal grade.
    pub completed: usize,
    pub accepted: usize,
    pub acceptance_rate_pct: f64,
    pub stage1: Stage1Stats,
    pub stage3: Stage3Stats,
    pub rejections: BTreeMap<String, usize>,
    /// Problems that failed transiently this run; retried on resume.
    pub errored: usize,
    pub errors: Vec<String>,
    pub records: Vec<StageRecord>,
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn pct(numer: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        round1(numer as f64 / denom as f64 * 100.0)
    }
}

impl Manifest {
    /// Builds the manifest from terminal outcomes (in input problem order)
    /// plus this run's transient errors.
    pub fn build(
        problems_total: usize,
        outcomes: &[ProblemOutcome],
        errors: Vec<String>,
    ) -> Manifest {
        let completed = outcomes.len();
        let accepted = outcomes
            .iter()
            .filter(|o| o.record.stage == Stage::Accepted)
            .count();

        let generated = outcomes.iter().filter(|o| o.trace.is_some()).count();
        let with_tool_use = outcomes.iter().filter(|o| o.stage1_tool_calls > 0).count();
        let proofs = outcomes.iter().filter(|o| o.stage1_compiled.is_some()).count();
        let proofs_compiled = outcomes
            .iter()
            .filter(|o| o.stage1_compiled == Some(true))
            .count();

        let candidates: usize = outcomes.iter().map(|o| o.stage3_candidates).sum();
        let compiled: usize = outcomes.iter().map(|o| o.stage3_compiled).sum();
        let problems_with_compiled = outcomes.iter().filter(|o| o.stage3_compiled > 0).count();

        let mut rejections: BTreeMap<String, usize> = BTreeMap::new();
        for outcome in outcomes {
            if outcome.record.stage == Stage::Rejected {
                let reason = outcome
                    .record
                    .reason
                    .expect("rejected record carries a reason");
                *rejections.entry(reason.as_str().to_string()).or_insert(0) += 1;
            }
        }

        Manifest {
            problems_total,
            completed,
            accepted,
            acceptance_rate_pct: pct(accepted, completed),
            stage1: Stage1Stats {
                generated,
                with_tool_use,
                proofs,
                proofs_compiled,
                compile_rate_pct: pct(proofs_compiled, generated),
            },
            stage3: Stage3Stats {
                candidates,
                compiled,
                compile_rate_pct: pct(compiled, candidates),
                problems_with_compiled,
            },
            rejections,
            errored: errors.len(),
            errors,
            records: outcomes.iter().map(|o| o.record.clone()).collect(),
        }
    }
}

/// A rejected problem's best candidate, kept for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectRecord {
    pub problem_id: String,
    pub reason: RejectReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceRecord>,
}
