//! Orchestration: concurrent per-problem processing, a resumable outcome
//! journal, and derived output files.
//!
//! The journal (`outcomes.jsonl`) is the single source of truth. Each
//! problem appends exactly one terminal outcome when graded; transient
//! failures append nothing and are retried on the next run. The dataset,
//! rejects file, and manifest are derived from the journal in input problem
//! order, so an interrupted run resumed later converges on byte-identical
//! outputs.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use lean_check::{extract_identifiers, Compiler};
use leansearch::SearchClient;
use model_client::ModelClient;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;
use trace_model::RenderOptions;

use crate::config::PipelineConfig;
use crate::records::{
    append_journal_line, repair_journal, Manifest, Problem, ProblemOutcome, RejectReason,
    RejectRecord, Stage, StageRecord,
};
use crate::stages::{
    extract_agentic_prefix, filter_trace, generate_agentic_trace, regenerate_proof, Candidate,
    CandidateFailure, StageDeps, StageFailure,
};
use crate::DistillError;

pub const JOURNAL_FILE: &str = "outcomes.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const REJECTS_FILE: &str = "rejects.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), DistillError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn render_options() -> RenderOptions {
    RenderOptions::default()
}

fn rejected_outcome(
    problem_id: &str,
    reason: RejectReason,
    trace: Option<trace_model::TraceRecord>,
    detail: Option<String>,
    stage1_compiled: Option<bool>,
    stage1_tool_calls: usize,
    stage3_candidates: usize,
    stage3_compiled: usize,
) -> ProblemOutcome {
    ProblemOutcome {
        record: StageRecord {
            problem_id: problem_id.to_string(),
            stage: Stage::Rejected,
            reason: Some(reason),
            artifact: Some(REJECTS_FILE.to_string()),
        },
        trace,
        detail,
        stage1_compiled,
        stage1_tool_calls,
        stage3_candidates,
        stage3_compiled,
    }
}

/// Drives one problem through all four stages. `Err` means a transient
/// infrastructure fault: nothing is journaled and the problem is retried on
/// the next run.
async fn process_problem(
    problem: Problem,
    deps: StageDeps,
    cfg: Arc<PipelineConfig>,
) -> Result<ProblemOutcome, String> {
    let id = problem.problem_id.as_str();

    let trace = match generate_agentic_trace(id, &problem.statement, &deps, &cfg).await {
        Ok(trace) => trace,
        Err(StageFailure::Budget { partial }) => {
            let responses = partial.tool_responses().len();
            return Ok(rejected_outcome(
                id,
                RejectReason::BudgetExhausted,
                Some(partial.to_record(&render_options())),
                Some(format!("round budget exhausted after {responses} tool responses")),
                None,
                partial.tool_call_count(),
                0,
                0,
            ));
        }
        Err(StageFailure::Protocol { partial, detail }) => {
            let (trace, calls) = match partial {
                Some(p) => (Some(p.to_record(&render_options())), p.tool_call_count()),
                None => (None, 0),
            };
            return Ok(rejected_outcome(
                id,
                RejectReason::ProtocolError,
                trace,
                Some(detail),
                None,
                calls,
                0,
                0,
            ));
        }
        Err(StageFailure::Transient { detail }) => return Err(detail),
    };

    let stage1_tool_calls = trace.tool_call_count();
    let stage1_compiled = match trace.final_proof() {
        Ok(proof) => match deps.compiler.compile(&proof.source).await {
            Ok(verdict) => Some(verdict.success()),
            Err(e) => return Err(format!("checker: {e}")),
        },
        Err(_) => None,
    };

    let prefix = match extract_agentic_prefix(&trace) {
        Ok(prefix) => prefix,
        Err(DistillError::NoToolUse) => {
            // Zero executed tool calls: grounding is impossible by
            // construction, so the trace is rejected without stage 3.
            return Ok(rejected_outcome(
                id,
                RejectReason::NoGrounding,
                Some(trace.to_record(&render_options())),
                Some("trace used no tools, so no retrieved theorem can ground it".into()),
                stage1_compiled,
                stage1_tool_calls,
                0,
                0,
            ));
        }
        Err(e) => return Err(e.to_string()),
    };

    let candidates = regenerate_proof(&prefix, &deps, &cfg).await;
    if candidates
        .iter()
        .all(|c| matches!(c.result, Err(CandidateFailure::Client { .. })))
    {
        let first = candidates
            .iter()
            .find_map(|c| match &c.result {
                Err(CandidateFailure::Client { detail }) => Some(detail.clone()),
                _ => None,
            })
            .unwrap_or_default();
        return Err(format!("all specialist completions failed: {first}"));
    }

    let retrieved = prefix.retrieved_theorem_names();
    let universe: HashSet<String> = retrieved.iter().cloned().collect();

    // Every received completion is graded, accepted or not, so the manifest
    // rates reflect all sampling, not sampling-until-success.
    let mut stage3_candidates = 0usize;
    let mut stage3_compiled = 0usize;
    let mut accepted: Option<(usize, trace_model::TraceRecord)> = None;
    let mut best_reject: Option<(u8, usize, RejectReason, Option<trace_model::TraceRecord>, String)> =
        None;

    for Candidate { sample_index, result } in &candidates {
        let graded = match result {
            Err(CandidateFailure::Client { .. }) => continue,
            Err(CandidateFailure::Protocol { detail }) => {
                stage3_candidates += 1;
                (RejectReason::ProtocolError, None, detail.clone())
            }
            Ok(candidate) => {
                stage3_candidates += 1;
                let proof = candidate
                    .final_proof()
                    .map_err(|e| format!("candidate lost its proof: {e}"))?;
                let verdict = deps
                    .compiler
                    .compile(&proof.source)
                    .await
                    .map_err(|e| format!("checker: {e}"))?;
                if verdict.success() {
                    stage3_compiled += 1;
                }
                let used = extract_identifiers(&proof.source, &universe);
                let record = filter_trace(candidate, &verdict, &used, &retrieved);
                match record.stage {
                    Stage::Accepted => {
                        if accepted.is_none() {
                            accepted =
                                Some((*sample_index, candidate.to_record(&render_options())));
                        }
                        continue;
                    }
                    _ => {
                        let reason = record.reason.expect("rejected record carries a reason");
                        (
                            reason,
                            Some(candidate.to_record(&render_options())),
                            format!("candidate {sample_index}: {}", reason.as_str()),
                        )
                    }
                }
            }
        };
        let (reason, cand_trace, detail) = graded;
        let rank = reason.rank();
        let worse = match &best_reject {
            Some((best_rank, _, _, _, _)) => rank < *best_rank,
            None => true,
        };
        if worse {
            best_reject = Some((rank, *sample_index, reason, cand_trace, detail));
        }
    }

    if let Some((_, accepted_trace)) = accepted {
        return Ok(ProblemOutcome {
            record: StageRecord {
                problem_id: id.to_string(),
                stage: Stage::Accepted,
                reason: None,
                artifact: Some(DATASET_FILE.to_string()),
            },
            trace: Some(accepted_trace),
            detail: None,
            stage1_compiled,
            stage1_tool_calls,
            stage3_candidates,
            stage3_compiled,
        });
    }

    let (_, _, reason, cand_trace, detail) =
        best_reject.expect("at least one completion was received");
    // A protocol-only rejection has no candidate trace; fall back to the
    // full stage-1 trace as audit evidence.
    let trace = cand_trace.unwrap_or_else(|| trace.to_record(&render_options()));
    Ok(rejected_outcome(
        id,
        reason,
        Some(trace),
        Some(detail),
        stage1_compiled,
        stage1_tool_calls,
        stage3_candidates,
        stage3_compiled,
    ))
}

/// Runs the whole pipeline over `problems`, resuming from any journal left
/// in `cfg.out_dir` by a previous run.
pub async fn run_pipeline(
    problems: &[Problem],
    cfg: &PipelineConfig,
) -> Result<Manifest, DistillError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let journal_path = cfg.out_dir.join(JOURNAL_FILE);

    let input_ids: HashSet<&str> = problems.iter().map(|p| p.problem_id.as_str()).collect();
    let mut outcomes: BTreeMap<String, ProblemOutcome> = BTreeMap::new();
    if journal_path.exists() {
        for outcome in repair_journal(&journal_path)? {
            if input_ids.contains(outcome.record.problem_id.as_str()) {
                outcomes.entry(outcome.record.problem_id.clone()).or_insert(outcome);
            }
        }
        if !outcomes.is_empty() {
            tracing::info!(resumed = outcomes.len(), "resuming from existing journal");
        }
    }

    let deps = StageDeps {
        client: ModelClient::builder()
            .api_key_from_env()
            .retry(cfg.retry.clone())
            .build(),
        search: SearchClient::new(cfg.search_url.clone()),
        compiler: Arc::new(Compiler::new(cfg.compile.to_compiler_config())),
    };
    let cfg_shared = Arc::new(cfg.clone());
    let limiter = Arc::new(Semaphore::new(cfg.workers));

    let mut tasks = JoinSet::new();
    for problem in problems {
        if outcomes.contains_key(&problem.problem_id) {
            continue;
        }
        let problem = problem.clone();
        let deps = deps.clone();
        let cfg_shared = Arc::clone(&cfg_shared);
        let limiter = Arc::clone(&limiter);
        tasks.spawn(async move {
            let _permit = limiter.acquire_owned().await.expect("semaphore never closes");
            let id = problem.problem_id.clone();
            (id, process_problem(problem, deps, cfg_shared).await)
        });
    }

    // Journal appends are serialized through this single collector.
    let mut errors = Vec::new();
    while let Some(joined) = tasks.join_next().await {
        let (problem_id, result) = joined.map_err(|e| DistillError::InvalidTrace(e.to_string()))?;
        match result {
            Ok(outcome) => {
                append_journal_line(&journal_path, &outcome)?;
                outcomes.insert(problem_id, outcome);
            }
            Err(detail) => {
                tracing::warn!(problem_id, detail, "problem errored; will retry next run");
                errors.push(format!("{problem_id}: {detail}"));
            }
        }
    }
    errors.sort();

    let ordered: Vec<&ProblemOutcome> = problems
        .iter()
        .filter_map(|p| outcomes.get(&p.problem_id))
        .collect();

    let mut dataset = String::new();
    let mut rejects = String::new();
    for outcome in &ordered {
        match outcome.record.stage {
            Stage::Accepted => {
                let trace = outcome.trace.as_ref().expect("accepted outcome carries a trace");
                dataset.push_str(&serde_json::to_string(trace).expect("trace serializes"));
                dataset.push('\n');
            }
            Stage::Rejected => {
                let record = RejectRecord {
                    problem_id: outcome.record.problem_id.clone(),
                    reason: outcome.record.reason.expect("rejected outcome carries a reason"),
                    trace: outcome.trace.clone(),
                };
                rejects.push_str(&serde_json::to_string(&record).expect("record serializes"));
                rejects.push('\n');
            }
            _ => {}
        }
    }

    let owned: Vec<ProblemOutcome> = ordered.into_iter().cloned().collect();
    let manifest = Manifest::build(problems.len(), &owned, errors);
    let manifest_bytes =
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes");

    atomic_write(&cfg.out_dir.join(DATASET_FILE), dataset.as_bytes())?;
    atomic_write(&cfg.out_dir.join(REJECTS_FILE), rejects.as_bytes())?;
    atomic_write(&cfg.out_dir.join(MANIFEST_FILE), &manifest_bytes)?;

    Ok(manifest)
}
