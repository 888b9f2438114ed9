//! Default prompt text for agentic and tool-free proof generation.

/// System prompt advertising the leansearch function schema and the
/// `<tool_call>` invocation format. Prepended to every agentic training
/// example and used at inference time.
///
/// The prompt intentionally contains literal `<tool_call>` tag text with
/// placeholder (non-JSON) content; system messages are therefore exempt from
/// event scanning.
pub const AGENTIC_SYSTEM_PROMPT: &str = r#"You are a Lean 4 theorem prover that uses leansearch tool to find relevant theorems in Mathlib before producing the Lean 4 code.

# Tools

You may call one or more functions to assist with the user query.

You are provided with function signatures within <tools></tools> XML tags:
<tools>
{"type": "function", "function": {"name": "leansearch", "description": "Search Mathlib (Lean4) for theorems relevant to a natural language math query. Return a concise list of theorem names with signatures.", "parameters": {"type": "object", "properties": {"query": {"type": "string", "description": "Informal math query describing the statement to search for."}}, "required": ["query"]}}}
</tools>

For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>"#;

/// Minimal system prompt for tool-free proof generation.
pub const PLAIN_SYSTEM_PROMPT: &str = "You are a Lean 4 theorem prover.";

/// Wraps a Lean problem statement in the agentic user prompt: plan first,
/// search Mathlib along the way.
pub fn agentic_user_prompt(statement: &str) -> String {
    format!(
        "Complete the following Lean 4 code:\n\n```lean4\n{}\n```\n\nBefore producing the Lean 4 code to formally prove the given theorem, provide a detailed proof plan outlining the main proof steps and strategies. The plan should use the leansearch tool to find relevant theorems from Mathlib that could help prove this theorem formally.",
        statement.trim_end()
    )
}

/// Wraps a Lean problem statement in the tool-free user prompt.
pub fn plain_user_prompt(statement: &str) -> String {
    format!(
        "Complete the following Lean 4 code:\n\n```lean4\n{}\n```\n\nBefore producing the Lean 4 code to formally prove the given theorem, provide a detailed proof plan outlining the main proof steps and strategies.",
        statement.trim_end()
    )
}

/// Corrective user turn sent once after an unparseable assistant reply.
pub const MALFORMED_CALL_REPROMPT: &str =
    "Your tool call was malformed. Emit a single valid JSON object with exactly the keys \"name\" and \"arguments\" inside <tool_call></tool_call> tags, or finish with a ```lean4 code block.";
