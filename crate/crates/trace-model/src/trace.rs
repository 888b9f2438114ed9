//! The parsed trace and the extraction operations built on it.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::event::{Segment, ToolCall, TraceEvent};
use crate::message::{ChatMessage, Role, TraceRecord};
use crate::parse::TraceError;
use crate::render::{render_trace, RenderOptions};
use crate::is_lean_language;

/// A validated multi-turn trace. Messages and their parsed segments are kept
/// in lockstep; mutation goes through reparsing, never in place.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrace {
    pub problem_id: String,
    /// Lean source of the problem statement, taken from the first Lean code
    /// block of the user message (or its full text when it has no fence).
    pub theorem_statement: String,
    messages: Vec<ChatMessage>,
    segments: Vec<Vec<Segment>>,
}

/// The Lean source of the trace's final answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalProof {
    pub source: String,
    pub language: String,
    /// Index of the assistant message the proof was taken from.
    pub message_index: usize,
}

impl AgentTrace {
    pub(crate) fn from_parts(
        problem_id: String,
        messages: Vec<ChatMessage>,
        segments: Vec<Vec<Segment>>,
    ) -> Self {
        let theorem_statement = segments
            .get(1)
            .and_then(|segs| {
                segs.iter().find_map(|seg| match seg {
                    Segment::Event(TraceEvent::CodeBlock { language, body })
                        if is_lean_language(language) =>
                    {
                        Some(body.trim().to_string())
                    }
                    _ => None,
                })
            })
            .unwrap_or_else(|| messages[1].content.trim().to_string());
        Self { problem_id, theorem_statement, messages, segments }
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn segments(&self) -> &[Vec<Segment>] {
        &self.segments
    }

    /// All events in message order, tagged with their message index.
    pub fn events(&self) -> impl Iterator<Item = (usize, &TraceEvent)> {
        self.segments.iter().enumerate().flat_map(|(i, segs)| {
            segs.iter().filter_map(move |seg| match seg {
                Segment::Event(event) => Some((i, event)),
                Segment::Text(_) => None,
            })
        })
    }

    pub fn tool_calls(&self) -> Vec<(usize, &ToolCall)> {
        self.events()
            .filter_map(|(i, event)| match event {
                TraceEvent::ToolCall(call) => Some((i, call)),
                _ => None,
            })
            .collect()
    }

    pub fn tool_call_count(&self) -> usize {
        self.tool_calls().len()
    }

    pub fn tool_responses(&self) -> Vec<(usize, &Value)> {
        self.events()
            .filter_map(|(i, event)| match event {
                TraceEvent::ToolResponse(payload) => Some((i, payload)),
                _ => None,
            })
            .collect()
    }

    /// Search queries issued by the assistant, in order, duplicates kept.
    /// Calls without a string `query` argument contribute nothing.
    pub fn queries(&self) -> Vec<String> {
        self.tool_calls()
            .into_iter()
            .filter_map(|(_, call)| call.query().map(str::to_string))
            .collect()
    }

    /// Union of theorem names over every tool response. Entries under
    /// `theorems` may be objects carrying a `name` field or bare signature
    /// strings, in which case the name is the leading token.
    pub fn retrieved_theorem_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for (_, payload) in self.tool_responses() {
            let Some(theorems) = payload.get("theorems").and_then(Value::as_array) else {
                continue;
            };
            for entry in theorems {
                let name = match entry {
                    Value::Object(obj) => obj.get("name").and_then(Value::as_str),
                    Value::String(sig) => {
                        sig.split(|c: char| c.is_whitespace() || c == '(' || c == ':')
                            .find(|tok| !tok.is_empty())
                    }
                    _ => None,
                };
                if let Some(name) = name {
                    if !name.is_empty() {
                        names.insert(name.to_string());
                    }
                }
            }
        }
        names
    }

    /// The last Lean code block of the last assistant message.
    pub fn final_proof(&self) -> Result<FinalProof, TraceError> {
        let (index, segs) = self
            .messages
            .iter()
            .zip(&self.segments)
            .enumerate()
            .rev()
            .find(|(_, (m, _))| m.role == Role::Assistant)
            .map(|(i, (_, segs))| (i, segs))
            .ok_or(TraceError::NoProofFound)?;
        segs.iter()
            .rev()
            .find_map(|seg| match seg {
                Segment::Event(TraceEvent::CodeBlock { language, body })
                    if is_lean_language(language) =>
                {
                    Some(FinalProof {
                        source: body.clone(),
                        language: language.clone(),
                        message_index: index,
                    })
                }
                _ => None,
            })
            .ok_or(TraceError::NoProofFound)
    }

    pub fn render(&self, options: &RenderOptions) -> Vec<ChatMessage> {
        render_trace(self, options)
    }

    pub fn to_record(&self, options: &RenderOptions) -> TraceRecord {
        TraceRecord { problem_id: self.problem_id.clone(), messages: self.render(options) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_trace;
    use crate::render::tool_response_block;
    use serde_json::json;

    fn trace_with_response(payload: Value) -> AgentTrace {
        parse_trace(
            "p",
            vec![
                ChatMessage::system("s"),
                ChatMessage::user("```lean4\ntheorem t : True := by sorry\n```"),
                ChatMessage::assistant(
                    "<tool_call>\n{\"name\":\"leansearch\",\"arguments\":{\"query\":\"true\"}}\n</tool_call>",
                ),
                ChatMessage::user(tool_response_block(&payload)),
                ChatMessage::assistant("```lean4\ntheorem t : True := trivial\n```"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn statement_comes_from_user_fence() {
        let trace = trace_with_response(json!({"theorems": []}));
        assert_eq!(trace.theorem_statement, "theorem t : True := by sorry");
    }

    #[test]
    fn retrieved_names_accept_objects_and_strings() {
        let trace = trace_with_response(json!({
            "tool": "leansearch",
            "theorems": [
                {"name": "Nat.gcd_comm", "formal_statement": "…", "score": 0.9},
                "Tactic.NormNum.nat_gcd_helper_1' (x y a b : ℕ) : Nat.gcd x y = 1",
                42,
            ]
        }));
        let names: Vec<_> = trace.retrieved_theorem_names().into_iter().collect();
        assert_eq!(names, vec!["Nat.gcd_comm", "Tactic.NormNum.nat_gcd_helper_1'"]);
    }

    #[test]
    fn final_proof_is_last_lean_block_of_last_assistant() {
        let trace = parse_trace(
            "p",
            vec![
                ChatMessage::system("s"),
                ChatMessage::user("prove"),
                ChatMessage::assistant(
                    "```lean4\nfirst draft\n```\nrevised:\n```lean4\nexact rfl\n```",
                ),
            ],
        )
        .unwrap();
        let proof = trace.final_proof().unwrap();
        assert_eq!(proof.source, "exact rfl\n");
        assert_eq!(proof.message_index, 2);
    }

    #[test]
    fn python_fence_is_not_a_proof() {
        let trace = parse_trace(
            "p",
            vec![
                ChatMessage::system("s"),
                ChatMessage::user("prove"),
                ChatMessage::assistant("```python\nprint(1)\n```"),
            ],
        )
        .unwrap();
        assert!(matches!(trace.final_proof(), Err(TraceError::NoProofFound)));
    }

    #[test]
    fn queries_preserve_order_and_duplicates() {
        let trace = parse_trace(
            "p",
            vec![
                ChatMessage::system("s"),
                ChatMessage::user("prove"),
                ChatMessage::assistant(
                    "<tool_call>\n{\"name\":\"leansearch\",\"arguments\":{\"query\":\"a\"}}\n</tool_call>\n<tool_call>\n{\"name\":\"leansearch\",\"arguments\":{\"query\":\"a\"}}\n</tool_call>\n<tool_call>\n{\"name\":\"leansearch\",\"arguments\":{\"query\":\"b\"}}\n</tool_call>",
                ),
            ],
        )
        .unwrap();
        assert_eq!(trace.queries(), vec!["a", "a", "b"]);
        assert_eq!(trace.tool_call_count(), 3);
    }
}
