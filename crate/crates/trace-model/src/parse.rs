//! Wire-format scanner.
//!
//! Content is scanned left to right for the earliest block opener among
//! `<think>`, `<tool_call>`, `<tool_response>`, and a code fence at line
//! start. Whichever opens first consumes through its closer, so blocks never
//! nest: a fence inside a think block is think text, and a `<think>` inside a
//! fence is code. An unclosed fence extends to the end of the message; an
//! unclosed tag is an error.

use serde_json::Value;

use crate::event::{Segment, ToolCall, TraceEvent};
use crate::message::{ChatMessage, Role};
use crate::trace::AgentTrace;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const CALL_OPEN: &str = "<tool_call>";
const CALL_CLOSE: &str = "</tool_call>";
const RESPONSE_OPEN: &str = "<tool_response>";
const RESPONSE_CLOSE: &str = "</tool_response>";
const FENCE: &str = "```";

#[derive(Debug, thiserror::Error)]
pub enum MessageError {
    #[error("malformed tool call: {0}")]
    MalformedToolCall(String),
    #[error("malformed tool response: {0}")]
    MalformedToolResponse(String),
    #[error("unclosed <{0}> block")]
    UnclosedBlock(&'static str),
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace has no messages")]
    Empty,
    #[error("message {index} has role {role}, expected {expected}")]
    UnexpectedRole { index: usize, role: Role, expected: Role },
    #[error("message {index}: {source}")]
    Message {
        index: usize,
        #[source]
        source: MessageError,
    },
    #[error("protocol violation at message {index}: {reason}")]
    ProtocolViolation { index: usize, reason: String },
    #[error("no Lean code block in the final assistant message")]
    NoProofFound,
}

#[derive(Clone, Copy, PartialEq)]
enum Opener {
    Think,
    Call,
    Response,
    Fence,
}

/// Finds the next fence opener: "```" at the start of a line.
fn find_fence(content: &str, from: usize) -> Option<usize> {
    let bytes = content.as_bytes();
    let mut at = from;
    while let Some(rel) = content[at..].find(FENCE) {
        let pos = at + rel;
        if pos == 0 || bytes[pos - 1] == b'\n' {
            return Some(pos);
        }
        at = pos + 1;
    }
    None
}

fn next_opener(content: &str, from: usize) -> Option<(usize, Opener)> {
    let candidates = [
        (content[from..].find(THINK_OPEN).map(|p| p + from), Opener::Think),
        (content[from..].find(CALL_OPEN).map(|p| p + from), Opener::Call),
        (content[from..].find(RESPONSE_OPEN).map(|p| p + from), Opener::Response),
        (find_fence(content, from), Opener::Fence),
    ];
    candidates
        .into_iter()
        .filter_map(|(pos, kind)| pos.map(|p| (p, kind)))
        .min_by_key(|(p, _)| *p)
}

fn parse_tool_call(inner: &str) -> Result<ToolCall, MessageError> {
    let value: Value = serde_json::from_str(inner.trim())
        .map_err(|e| MessageError::MalformedToolCall(format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(MessageError::MalformedToolCall("payload is not a JSON object".into()));
    };
    let name = obj.remove("name");
    let arguments = obj.remove("arguments");
    if !obj.is_empty() {
        let extra: Vec<&str> = obj.keys().map(String::as_str).collect();
        return Err(MessageError::MalformedToolCall(format!(
            "unexpected keys {extra:?}; payload must have exactly `name` and `arguments`"
        )));
    }
    let name = match name {
        Some(Value::String(s)) if !s.is_empty() => s,
        Some(Value::String(_)) => {
            return Err(MessageError::MalformedToolCall("`name` is empty".into()))
        }
        Some(_) => return Err(MessageError::MalformedToolCall("`name` must be a string".into())),
        None => return Err(MessageError::MalformedToolCall("missing key `name`".into())),
    };
    let arguments = match arguments {
        Some(Value::Object(map)) => map,
        Some(_) => {
            return Err(MessageError::MalformedToolCall(
                "`arguments` must be a JSON object".into(),
            ))
        }
        None => return Err(MessageError::MalformedToolCall("missing key `arguments`".into())),
    };
    Ok(ToolCall { name, arguments })
}

fn parse_tool_response(inner: &str) -> Result<Value, MessageError> {
    let value: Value = serde_json::from_str(inner.trim())
        .map_err(|e| MessageError::MalformedToolResponse(format!("invalid JSON: {e}")))?;
    if !value.is_object() {
        return Err(MessageError::MalformedToolResponse("payload is not a JSON object".into()));
    }
    Ok(value)
}

/// Consumes a fenced block starting at `open`. Returns the code event and the
/// offset just past the closing fence, or past the end of content when the
/// fence is unclosed.
fn parse_fence(content: &str, open: usize) -> (TraceEvent, usize) {
    let after_ticks = open + FENCE.len();
    let (language, body_start) = match content[after_ticks..].find('\n') {
        Some(nl) => {
            let lang = content[after_ticks..after_ticks + nl].trim().to_string();
            (lang, after_ticks + nl + 1)
        }
        // Opener line is the last line of the message: empty, unclosed block.
        None => (content[after_ticks..].trim().to_string(), content.len()),
    };

    let mut line_start = body_start;
    while line_start < content.len() {
        let line_end = content[line_start..]
            .find('\n')
            .map(|p| line_start + p)
            .unwrap_or(content.len());
        let line = &content[line_start..line_end];
        if line.starts_with(FENCE) && line[FENCE.len()..].trim().is_empty() {
            let body = content[body_start..line_start].to_string();
            return (TraceEvent::CodeBlock { language, body }, line_start + FENCE.len());
        }
        line_start = line_end + 1;
    }
    let body = content[body_start.min(content.len())..].to_string();
    (TraceEvent::CodeBlock { language, body }, content.len())
}

/// Splits one message's content into text and event segments.
pub fn parse_message(content: &str) -> Result<Vec<Segment>, MessageError> {
    let mut segments = Vec::new();
    let mut cursor = 0;

    while let Some((open, kind)) = next_opener(content, cursor) {
        if open > cursor {
            segments.push(Segment::Text(content[cursor..open].to_string()));
        }
        match kind {
            Opener::Think => {
                let inner_start = open + THINK_OPEN.len();
                let close = content[inner_start..]
                    .find(THINK_CLOSE)
                    .ok_or(MessageError::UnclosedBlock("think"))?
                    + inner_start;
                segments
                    .push(Segment::Event(TraceEvent::Think(content[inner_start..close].into())));
                cursor = close + THINK_CLOSE.len();
            }
            Opener::Call => {
                let inner_start = open + CALL_OPEN.len();
                let close = content[inner_start..]
                    .find(CALL_CLOSE)
                    .ok_or_else(|| {
                        MessageError::MalformedToolCall("unclosed <tool_call> block".into())
                    })?
                    + inner_start;
                let call = parse_tool_call(&content[inner_start..close])?;
                segments.push(Segment::Event(TraceEvent::ToolCall(call)));
                cursor = close + CALL_CLOSE.len();
            }
            Opener::Response => {
                let inner_start = open + RESPONSE_OPEN.len();
                let close = content[inner_start..]
                    .find(RESPONSE_CLOSE)
                    .ok_or_else(|| {
                        MessageError::MalformedToolResponse("unclosed <tool_response> block".into())
                    })?
                    + inner_start;
                let payload = parse_tool_response(&content[inner_start..close])?;
                segments.push(Segment::Event(TraceEvent::ToolResponse(payload)));
                cursor = close + RESPONSE_CLOSE.len();
            }
            Opener::Fence => {
                let (event, next) = parse_fence(content, open);
                segments.push(Segment::Event(event));
                cursor = next;
            }
        }
    }

    if cursor < content.len() {
        segments.push(Segment::Text(content[cursor..].to_string()));
    }
    Ok(segments)
}

/// Parses a full transcript into an [`AgentTrace`], enforcing the trace
/// protocol: message 0 is the system prompt, message 1 the user problem
/// statement, tool calls appear only in assistant messages, tool responses
/// only in user messages, and no response precedes its call. System messages
/// are kept verbatim (the tool-schema prompt contains literal tag text that
/// must not be scanned for events).
pub fn parse_trace(
    problem_id: impl Into<String>,
    messages: Vec<ChatMessage>,
) -> Result<AgentTrace, TraceError> {
    if messages.is_empty() {
        return Err(TraceError::Empty);
    }
    if messages[0].role != Role::System {
        return Err(TraceError::UnexpectedRole {
            index: 0,
            role: messages[0].role,
            expected: Role::System,
        });
    }
    match messages.get(1) {
        None => {
            return Err(TraceError::ProtocolViolation {
                index: 0,
                reason: "trace must contain a user problem statement after the system prompt"
                    .into(),
            })
        }
        Some(m) if m.role != Role::User => {
            return Err(TraceError::UnexpectedRole { index: 1, role: m.role, expected: Role::User })
        }
        Some(_) => {}
    }

    let mut segments = Vec::with_capacity(messages.len());
    let mut calls = 0usize;
    let mut responses = 0usize;
    for (index, message) in messages.iter().enumerate() {
        let segs = if message.role == Role::System {
            if message.content.is_empty() {
                Vec::new()
            } else {
                vec![Segment::Text(message.content.clone())]
            }
        } else {
            parse_message(&message.content)
                .map_err(|source| TraceError::Message { index, source })?
        };

        for seg in &segs {
            match seg {
                Segment::Event(TraceEvent::ToolCall(_)) => {
                    if message.role != Role::Assistant {
                        return Err(TraceError::ProtocolViolation {
                            index,
                            reason: format!(
                                "tool call in a {} message; calls belong to the assistant",
                                message.role
                            ),
                        });
                    }
                    calls += 1;
                }
                Segment::Event(TraceEvent::ToolResponse(_)) => {
                    if message.role != Role::User {
                        return Err(TraceError::ProtocolViolation {
                            index,
                            reason: format!(
                                "tool response in a {} message; responses belong to the user role",
                                message.role
                            ),
                        });
                    }
                    responses += 1;
                    if responses > calls {
                        return Err(TraceError::ProtocolViolation {
                            index,
                            reason: "tool response without a preceding tool call".into(),
                        });
                    }
                }
                _ => {}
            }
        }
        segments.push(segs);
    }

    Ok(AgentTrace::from_parts(problem_id.into(), messages, segments))
}
