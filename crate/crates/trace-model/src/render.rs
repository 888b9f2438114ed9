//! Rendering segments back to wire text.
//!
//! Text segments are reproduced byte for byte. Event JSON is emitted in
//! canonical form (compact separators, sorted object keys), so a parse and
//! re-render normalizes only the JSON inside tags, never surrounding text.

use serde::Serialize;
use serde_json::Value;

use crate::event::{Segment, ToolCall, TraceEvent};
use crate::message::{ChatMessage, Role};
use crate::trace::AgentTrace;

#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    /// Drop `<think>` blocks from rendered output. Off by default: training
    /// exports keep the reasoning.
    pub strip_think: bool,
}

#[derive(Serialize)]
struct ToolCallWire<'a> {
    name: &'a str,
    arguments: &'a serde_json::Map<String, Value>,
}

pub fn think_block(text: &str) -> String {
    format!("<think>{text}</think>")
}

pub fn tool_call_block(call: &ToolCall) -> String {
    let wire = ToolCallWire { name: &call.name, arguments: &call.arguments };
    let json = serde_json::to_string(&wire).expect("tool call serializes");
    format!("<tool_call>\n{json}\n</tool_call>")
}

pub fn tool_response_block(payload: &Value) -> String {
    let json = serde_json::to_string(payload).expect("tool response serializes");
    format!("<tool_response>\n{json}\n</tool_response>")
}

pub fn code_block(language: &str, body: &str) -> String {
    format!("```{language}\n{body}```")
}

fn render_event(event: &TraceEvent) -> String {
    match event {
        TraceEvent::Think(text) => think_block(text),
        TraceEvent::ToolCall(call) => tool_call_block(call),
        TraceEvent::ToolResponse(payload) => tool_response_block(payload),
        TraceEvent::CodeBlock { language, body } => code_block(language, body),
    }
}

pub fn render_segments(segments: &[Segment]) -> String {
    render_segments_with(segments, &RenderOptions::default())
}

pub fn render_segments_with(segments: &[Segment], options: &RenderOptions) -> String {
    let mut out = String::new();
    for segment in segments {
        match segment {
            Segment::Text(text) => out.push_str(text),
            Segment::Event(TraceEvent::Think(_)) if options.strip_think => {}
            Segment::Event(event) => out.push_str(&render_event(event)),
        }
    }
    out
}

pub(crate) fn render_trace(trace: &AgentTrace, options: &RenderOptions) -> Vec<ChatMessage> {
    trace
        .messages()
        .iter()
        .zip(trace.segments())
        .map(|(message, segments)| {
            if message.role == Role::System {
                message.clone()
            } else {
                ChatMessage::new(message.role, render_segments_with(segments, options))
            }
        })
        .collect()
}
