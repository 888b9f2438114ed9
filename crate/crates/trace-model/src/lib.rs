//! Data model for agentic theorem-proving traces.
//!
//! A trace is a multi-turn chat transcript in which the assistant interleaves
//! `<think>` blocks, `<tool_call>` invocations, and fenced Lean code, and the
//! user role carries `<tool_response>` payloads back. This crate parses that
//! wire format into typed events, renders it back out byte-faithfully, and
//! handles JSONL persistence of whole traces.

mod event;
mod message;
mod parse;
mod render;
mod trace;

pub mod prompts;
pub mod samples;

pub use event::{Segment, ToolCall, TraceEvent};
pub use message::{
    read_traces_jsonl, write_traces_jsonl, ChatMessage, Role, TraceRecord, WireError,
};
pub use parse::{parse_message, parse_trace, MessageError, TraceError};
pub use render::{
    code_block, render_segments, render_segments_with, think_block, tool_call_block,
    tool_response_block, RenderOptions,
};
pub use trace::{AgentTrace, FinalProof};

/// Fence language tags treated as Lean source.
pub fn is_lean_language(language: &str) -> bool {
    language.eq_ignore_ascii_case("lean4") || language.eq_ignore_ascii_case("lean")
}
