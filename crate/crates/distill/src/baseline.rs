//! Tool-free baseline generation: the same problems, a plain prover prompt,
//! no retrieval loop. Output feeds the evaluation metrics directly.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use eval_metrics::{write_generations_jsonl, GenerationRecord};
use lean_check::{extract_identifiers, Compiler};
use model_client::{ChatRequest, ModelClient};
use trace_model::{parse_message, prompts, ChatMessage, Segment, TraceEvent};

use crate::config::{CompileSettings, EndpointConfig};
use crate::records::Problem;
use crate::DistillError;

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub endpoint: EndpointConfig,
    pub samples_per_problem: usize,
    /// Identifier universe used-identifier extraction runs against,
    /// typically the names in the retrieval corpus.
    pub universe: BTreeSet<String>,
    pub compile: CompileSettings,
    pub out_path: PathBuf,
}

fn last_lean_block(content: &str) -> Option<String> {
    let segments = parse_message(content).ok()?;
    segments.iter().rev().find_map(|seg| match seg {
        Segment::Event(TraceEvent::CodeBlock { language, body })
            if trace_model::is_lean_language(language) =>
        {
            Some(body.clone())
        }
        _ => None,
    })
}

/// Generates `samples_per_problem` tool-free completions per problem and
/// writes one GenerationRecord per completion. Baselines are small and
/// diagnostic, so generation is sequential and client errors abort the run.
pub async fn run_baseline(
    problems: &[Problem],
    cfg: &BaselineConfig,
) -> Result<Vec<GenerationRecord>, DistillError> {
    if cfg.samples_per_problem < 1 {
        return Err(DistillError::InvalidConfig("samples_per_problem must be at least 1".into()));
    }
    let client = ModelClient::builder().api_key_from_env().build();
    let compiler = Arc::new(Compiler::new(cfg.compile.to_compiler_config()));
    let universe: HashSet<String> = cfg.universe.iter().cloned().collect();

    let mut records = Vec::with_capacity(problems.len() * cfg.samples_per_problem);
    for problem in problems {
        let messages = vec![
            ChatMessage::system(prompts::PLAIN_SYSTEM_PROMPT),
            ChatMessage::user(prompts::plain_user_prompt(&problem.statement)),
        ];
        for sample_index in 0..cfg.samples_per_problem {
            let request = ChatRequest {
                model: cfg.endpoint.model.clone(),
                messages: messages.clone(),
                temperature: cfg.endpoint.temperature,
                max_tokens: cfg.endpoint.max_tokens,
                stop: None,
            };
            let completion = client
                .chat(&cfg.endpoint.base_url, &request)
                .await
                .map_err(|e| DistillError::Client(e.to_string()))?;

            let (compiled, used, proof_source) = match last_lean_block(&completion.content) {
                Some(source) => {
                    let verdict = compiler
                        .compile(&source)
                        .await
                        .map_err(|e| DistillError::Checker(e.to_string()))?;
                    let used = extract_identifiers(&source, &universe);
                    (verdict.success(), used, source)
                }
                None => (false, BTreeSet::new(), String::new()),
            };

            records.push(GenerationRecord {
                problem_id: problem.problem_id.clone(),
                sample_index: sample_index as u32,
                compiled,
                tool_call_executed: false,
                used_identifiers: used,
                retrieved_identifiers: BTreeSet::new(),
                proof_source,
            });
        }
    }
    write_generations_jsonl(&cfg.out_path, &records).map_err(|e| match e {
        eval_metrics::MetricError::Io(io) => DistillError::Io(io),
        other => DistillError::InvalidTrace(other.to_string()),
    })?;
    Ok(records)
}
