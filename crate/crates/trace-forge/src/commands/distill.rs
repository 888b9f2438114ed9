//! `distill`: run the four-stage trace pipeline over a problems file.
//! Artifacts (dataset, rejects, stage manifest, resume journal) are owned
//! by the pipeline; this wrapper adds the run manifest and a stdout
//! summary line.

use distill::{read_problems_jsonl, run_pipeline, PipelineConfig};
use serde_json::json;

use super::{counters, RunContext};
use crate::{module_error, CliError};

pub async fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = pipeline_config(ctx)?;
    let problems_path = ctx
        .config
        .distill
        .problems
        .clone()
        .ok_or_else(|| CliError::missing("distill.problems", "--problems"))?;

    let problems = read_problems_jsonl(&problems_path).map_err(module_error("distill"))?;
    tracing::info!(
        problems = problems.len(),
        out_dir = %cfg.out_dir.display(),
        "starting distillation"
    );
    let manifest = run_pipeline(&problems, &cfg).await.map_err(module_error("distill"))?;

    let stats = counters([
        ("problems_total", manifest.problems_total as u64),
        ("completed", manifest.completed as u64),
        ("accepted", manifest.accepted as u64),
        ("errored", manifest.errored as u64),
        ("stage1_generated", manifest.stage1.generated as u64),
        ("stage1_proofs_compiled", manifest.stage1.proofs_compiled as u64),
        ("stage3_candidates", manifest.stage3.candidates as u64),
        ("stage3_compiled", manifest.stage3.compiled as u64),
    ]);
    ctx.write_manifest(&cfg.out_dir, &stats)?;

    println!(
        "{}",
        json!({
            "out_dir": cfg.out_dir.display().to_string(),
            "problems_total": manifest.problems_total,
            "completed": manifest.completed,
            "accepted": manifest.accepted,
            "errored": manifest.errored,
            "acceptance_rate_pct": manifest.acceptance_rate_pct,
        })
    );
    Ok(())
}

fn pipeline_config(ctx: &RunContext) -> Result<PipelineConfig, CliError> {
    let config = &ctx.config;
    let generalist = config
        .endpoints
        .generalist
        .as_ref()
        .ok_or_else(|| CliError::missing("endpoints.generalist", "--set endpoints.generalist.base_url=..."))?;
    let specialist = config
        .endpoints
        .specialist
        .as_ref()
        .ok_or_else(|| CliError::missing("endpoints.specialist", "--set endpoints.specialist.base_url=..."))?;
    let compiler = config
        .endpoints
        .compiler
        .as_ref()
        .ok_or_else(|| CliError::missing("endpoints.compiler", "--set endpoints.compiler.kind=..."))?;
    let search_url = config
        .search
        .url
        .clone()
        .ok_or_else(|| CliError::missing("search.url", "--set search.url=..."))?;

    let d = &config.distill;
    let out_dir = d.out_dir.clone().unwrap_or_else(|| config.run.out_dir.join("distill"));
    Ok(PipelineConfig {
        generalist: generalist.to_endpoint_config(),
        specialist: specialist.to_endpoint_config(),
        search_url,
        search_top_k: config.search.top_k,
        max_tool_rounds: d.max_tool_rounds,
        samples_per_problem: d.samples_per_problem,
        statement_char_cap: d.statement_char_cap,
        compile: compiler.to_compile_settings()?,
        workers: d.workers,
        retry: d.retry_policy(),
        out_dir,
    })
}
