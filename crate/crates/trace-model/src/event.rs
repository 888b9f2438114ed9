//! Typed events embedded in message content.

use serde_json::Value;

/// A tool invocation: `{"name": ..., "arguments": {...}}` inside
/// `<tool_call>` tags. The argument map is an arbitrary JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolCall {
    pub name: String,
    pub arguments: serde_json::Map<String, Value>,
}

impl ToolCall {
    /// The `query` argument, when present as a string.
    pub fn query(&self) -> Option<&str> {
        self.arguments.get("query").and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// Opaque chain-of-thought text between `<think>` tags. Nested markup
    /// inside the block is not interpreted.
    Think(String),
    ToolCall(ToolCall),
    /// The JSON object carried between `<tool_response>` tags.
    ToolResponse(Value),
    /// A fenced code block. `body` is the raw text between the fence lines,
    /// including its trailing newline when one was present.
    CodeBlock { language: String, body: String },
}

/// Message content splits into plain text runs and events, in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Text(String),
    Event(TraceEvent),
}
