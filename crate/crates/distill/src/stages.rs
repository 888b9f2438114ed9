//! The four stage operations: agentic generation, prefix extraction, proof
//! regeneration, and quality filtering.

use std::collections::BTreeSet;
use std::sync::Arc;

use lean_check::{detect_incomplete, Compiler};
use leansearch::{SearchClient, SearchError};
use model_client::{ChatRequest, ModelClient};
use serde_json::{json, Value};
use trace_model::{
    parse_message, parse_trace, prompts, render_segments, AgentTrace, ChatMessage, Segment,
    TraceEvent, ToolCall,
};

use crate::config::{EndpointConfig, PipelineConfig};
use crate::records::{RejectReason, Stage, StageRecord};
use crate::DistillError;

/// How a stage operation failed for one problem or candidate.
#[derive(Debug)]
pub enum StageFailure {
    /// Round cap hit with no terminal proof; the partial trace is kept as
    /// rejection evidence.
    Budget { partial: Box<AgentTrace> },
    /// Unusable assistant turn after the one allowed reprompt.
    Protocol { partial: Option<Box<AgentTrace>>, detail: String },
    /// Infrastructure fault (model endpoint, search service down). The
    /// problem is retried on the next run instead of being graded.
    Transient { detail: String },
}

impl StageFailure {
    fn transient(detail: impl Into<String>) -> Self {
        StageFailure::Transient { detail: detail.into() }
    }
}

/// Shared service handles, cheap to clone per worker.
#[derive(Clone)]
pub struct StageDeps {
    pub client: ModelClient,
    pub search: SearchClient,
    pub compiler: Arc<Compiler>,
}

fn chat_request(endpoint: &EndpointConfig, messages: Vec<ChatMessage>) -> ChatRequest {
    ChatRequest {
        model: endpoint.model.clone(),
        messages,
        temperature: endpoint.temperature,
        max_tokens: endpoint.max_tokens,
        stop: None,
    }
}

/// What one assistant turn contained, as far as the loop cares.
enum TurnShape {
    /// Parsed clean: zero or more calls; call-free turns always carry a
    /// Lean block, or they would be unusable.
    Usable { calls: Vec<ToolCall> },
    /// Parse failure, a tool_response in assistant content, or a turn with
    /// neither a call nor a Lean block. Grounds for the corrective reprompt.
    Unusable { why: String },
}

fn inspect_turn(content: &str) -> TurnShape {
    let segments = match parse_message(content) {
        Ok(segments) => segments,
        Err(e) => return TurnShape::Unusable { why: format!("unparseable turn: {e}") },
    };
    let mut calls = Vec::new();
    let mut has_lean = false;
    for segment in &segments {
        match segment {
            Segment::Event(TraceEvent::ToolCall(call)) => calls.push(call.clone()),
            Segment::Event(TraceEvent::ToolResponse(_)) => {
                return TurnShape::Unusable {
                    why: "assistant turn contains a tool_response block".into(),
                }
            }
            Segment::Event(TraceEvent::CodeBlock { language, .. })
                if trace_model::is_lean_language(language) =>
            {
                has_lean = true;
            }
            _ => {}
        }
    }
    if calls.is_empty() && !has_lean {
        return TurnShape::Unusable { why: "turn has neither a tool call nor a Lean block".into() };
    }
    TurnShape::Usable { calls }
}

/// Truncates each retrieved theorem's formal statement to the config cap so
/// tool responses cannot blow out the assistant's context budget.
fn truncate_statements(payload: &mut Value, cap: usize) {
    let Some(theorems) = payload.get_mut("theorems").and_then(Value::as_array_mut) else {
        return;
    };
    for entry in theorems {
        let Some(stmt) = entry.get_mut("formal_statement") else { continue };
        if let Value::String(s) = stmt {
            if s.chars().count() > cap {
                *s = s.chars().take(cap).collect();
            }
        }
    }
}

/// Executes one tool call against the retrieval service. Caller mistakes
/// (unknown tool, missing query, rejected request) come back as error
/// payloads so the loop can continue; an unreachable or failing service is a
/// transient fault instead.
pub async fn execute_tool_call(
    call: &ToolCall,
    deps: &StageDeps,
    cfg: &PipelineConfig,
) -> Result<Value, StageFailure> {
    if call.name != "leansearch" {
        return Ok(json!({ "error": format!("unknown tool: {}", call.name) }));
    }
    let Some(query) = call.query() else {
        return Ok(json!({ "error": "tool call is missing a string 'query' argument" }));
    };
    match deps.search.search(query, cfg.search_top_k).await {
        Ok(mut payload) => {
            truncate_statements(&mut payload, cfg.statement_char_cap);
            Ok(payload)
        }
        Err(SearchError::Service { status, body }) if (400..500).contains(&status) => {
            Ok(json!({ "error": format!("search rejected the request ({status}): {body}") }))
        }
        Err(e) => Err(StageFailure::transient(format!("search service: {e}"))),
    }
}

/// Runs the reasoning-action-observation loop for one problem: seed with the
/// agentic system prompt and the statement, execute every tool call after
/// each assistant turn, answer them all in a single user message, and stop
/// when a turn carries a Lean block and no new call.
///
/// One corrective reprompt per problem is allowed for an unusable turn; the
/// recovery exchange stays in the live conversation but never in the
/// returned trace. Rounds count usable assistant turns, and the final
/// round's calls are still executed before the budget verdict.
pub async fn generate_agentic_trace(
    problem_id: &str,
    statement: &str,
    deps: &StageDeps,
    cfg: &PipelineConfig,
) -> Result<AgentTrace, StageFailure> {
    let seed = vec![
        ChatMessage::system(prompts::AGENTIC_SYSTEM_PROMPT),
        ChatMessage::user(prompts::agentic_user_prompt(statement)),
    ];
    let mut durable = seed.clone();
    let mut convo = seed;
    let mut reprompted = false;
    let mut rounds = 0usize;

    loop {
        if rounds == cfg.max_tool_rounds {
            let partial = parse_trace(problem_id, durable)
                .map_err(|e| StageFailure::transient(format!("partial trace invalid: {e}")))?;
            return Err(StageFailure::Budget { partial: Box::new(partial) });
        }
        let completion = deps
            .client
            .chat(&cfg.generalist.base_url, &chat_request(&cfg.generalist, convo.clone()))
            .await
            .map_err(|e| StageFailure::transient(format!("generalist endpoint: {e}")))?;
        let content = completion.content;

        let calls = match inspect_turn(&content) {
            // A usable call-free turn always carries a Lean block, so
            // calls.is_empty() alone is the terminal condition.
            TurnShape::Usable { calls } => calls,
            TurnShape::Unusable { why } => {
                if reprompted {
                    let partial = parse_trace(problem_id, durable).ok().map(Box::new);
                    return Err(StageFailure::Protocol { partial, detail: why });
                }
                reprompted = true;
                tracing::warn!(problem_id, why, "reprompting after unusable turn");
                convo.push(ChatMessage::assistant(content));
                convo.push(ChatMessage::user(prompts::MALFORMED_CALL_REPROMPT));
                continue;
            }
        };

        rounds += 1;
        durable.push(ChatMessage::assistant(content.clone()));
        convo.push(ChatMessage::assistant(content));

        if calls.is_empty() {
            let trace = parse_trace(problem_id, durable).map_err(|e| StageFailure::Protocol {
                partial: None,
                detail: format!("terminal trace invalid: {e}"),
            })?;
            return Ok(trace);
        }

        // A turn mixing a Lean block with calls keeps looping: the draft is
        // not terminal until the assistant stops asking for tools.
        let mut blocks = Vec::with_capacity(calls.len());
        for call in &calls {
            let payload = execute_tool_call(call, deps, cfg).await?;
            blocks.push(trace_model::tool_response_block(&payload));
        }
        let response = ChatMessage::user(blocks.join("\n"));
        durable.push(response.clone());
        convo.push(response);
    }
}

/// Cuts the trace immediately after its last ToolResponse user message. An
/// assistant message mixing a final call with trailing content is truncated
/// after that call. Zero tool calls means there is nothing to retain.
pub fn extract_agentic_prefix(trace: &AgentTrace) -> Result<AgentTrace, DistillError> {
    let last_response_msg = trace
        .tool_responses()
        .last()
        .map(|(idx, _)| *idx)
        .ok_or(DistillError::NoToolUse)?;

    let mut messages: Vec<ChatMessage> = trace.messages()[..=last_response_msg].to_vec();

    // The assistant message feeding that response keeps nothing past its
    // last call: a mixed turn (call + draft proof) must not leak the draft
    // into the specialist's context.
    let feeder = (0..last_response_msg)
        .rev()
        .find(|&i| {
            trace.segments()[i]
                .iter()
                .any(|seg| matches!(seg, Segment::Event(TraceEvent::ToolCall(_))))
        })
        .expect("a tool response is always preceded by a tool call");
    let segments = &trace.segments()[feeder];
    let last_call = segments
        .iter()
        .rposition(|seg| matches!(seg, Segment::Event(TraceEvent::ToolCall(_))))
        .expect("feeder message contains a call");
    if last_call + 1 < segments.len() {
        messages[feeder].content = render_segments(&segments[..=last_call]);
    }

    parse_trace(trace.problem_id.clone(), messages)
        .map_err(|e| DistillError::InvalidTrace(e.to_string()))
}

/// One specialist completion over a prefix.
#[derive(Debug)]
pub struct Candidate {
    pub sample_index: usize,
    pub result: Result<AgentTrace, CandidateFailure>,
}

#[derive(Debug)]
pub enum CandidateFailure {
    /// Completion arrived but is not a usable proof turn.
    Protocol { detail: String },
    /// Completion never arrived.
    Client { detail: String },
}

/// Draws up to `samples_per_problem` specialist completions over the prefix,
/// each appended as a final assistant message. Candidates are returned in
/// sampling order; client failures surface per candidate.
pub async fn regenerate_proof(
    prefix: &AgentTrace,
    deps: &StageDeps,
    cfg: &PipelineConfig,
) -> Vec<Candidate> {
    let mut candidates = Vec::with_capacity(cfg.samples_per_problem);
    for sample_index in 0..cfg.samples_per_problem {
        let request = chat_request(&cfg.specialist, prefix.messages().to_vec());
        let result = match deps.client.chat(&cfg.specialist.base_url, &request).await {
            Err(e) => Err(CandidateFailure::Client { detail: e.to_string() }),
            Ok(completion) => {
                let mut messages = prefix.messages().to_vec();
                messages.push(ChatMessage::assistant(completion.content));
                match parse_trace(prefix.problem_id.clone(), messages) {
                    Err(e) => Err(CandidateFailure::Protocol {
                        detail: format!("completion does not parse: {e}"),
                    }),
                    Ok(trace) => match trace.final_proof() {
                        Ok(_) => Ok(trace),
                        Err(_) => Err(CandidateFailure::Protocol {
                            detail: "completion carries no Lean code block".into(),
                        }),
                    },
                }
            }
        };
        candidates.push(Candidate { sample_index, result });
    }
    candidates
}

/// Grades one candidate: accepted iff the proof compiled, is free of
/// sorry/admit, and uses at least one retrieved theorem. Otherwise the first
/// failing reason in order [compile_failure, no_grounding] wins.
pub fn filter_trace(
    candidate: &AgentTrace,
    verdict: &lean_check::CompileVerdict,
    used: &BTreeSet<String>,
    retrieved: &BTreeSet<String>,
) -> StageRecord {
    let proof_incomplete = candidate
        .final_proof()
        .map(|proof| detect_incomplete(&proof.source))
        .unwrap_or(true);
    let grounded = used.intersection(retrieved).next().is_some();

    if verdict.success() && !proof_incomplete && grounded {
        StageRecord {
            problem_id: candidate.problem_id.clone(),
            stage: Stage::Accepted,
            reason: None,
            artifact: None,
        }
    } else {
        let reason = if !verdict.success() || proof_incomplete {
            RejectReason::CompileFailure
        } else {
            RejectReason::NoGrounding
        };
        StageRecord {
            problem_id: candidate.problem_id.clone(),
            stage: Stage::Rejected,
            reason: Some(reason),
            artifact: None,
        }
    }
}
