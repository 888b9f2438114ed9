//! `baseline-gen`: sample tool-free completions per problem and write the
//! GenerationRecords whose emitted identifiers define the generative
//! support set. The baseline model never sees the search tool, so
//! `tool_call_executed` is false and `retrieved_identifiers` empty on
//! every record.

use distill::{read_problems_jsonl, run_baseline, BaselineConfig};
use serde_json::json;

use super::eval::universe_from_corpus;
use super::{counters, RunContext};
use crate::{module_error, CliError};

pub const GENERATIONS_FILE: &str = "generations.jsonl";

pub async fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let section = ctx.config.baseline.clone();
    let problems_path = section
        .problems
        .clone()
        .ok_or_else(|| CliError::missing("baseline.problems", "--problems"))?;
    let endpoint = ctx
        .config
        .endpoints
        .specialist
        .as_ref()
        .ok_or_else(|| CliError::missing("endpoints.specialist", "--set endpoints.specialist.base_url=..."))?;
    let compiler = ctx
        .config
        .endpoints
        .compiler
        .as_ref()
        .ok_or_else(|| CliError::missing("endpoints.compiler", "--set endpoints.compiler.kind=..."))?;
    let out_dir =
        section.out_dir.clone().unwrap_or_else(|| ctx.config.run.out_dir.join("baseline"));

    let universe = match &section.corpus {
        Some(path) => universe_from_corpus(path)?,
        None => Default::default(),
    };
    let problems = read_problems_jsonl(&problems_path).map_err(module_error("distill"))?;

    std::fs::create_dir_all(&out_dir).map_err(crate::io_error(&out_dir))?;
    // The generator streams into out_path; point it at a temp sibling and
    // rename on success so a crash never leaves a half-written dataset.
    let out_path = out_dir.join(GENERATIONS_FILE);
    let tmp_path = out_dir.join(format!("{GENERATIONS_FILE}.tmp"));
    let cfg = BaselineConfig {
        endpoint: endpoint.to_endpoint_config(),
        samples_per_problem: section.samples_per_problem,
        universe,
        compile: compiler.to_compile_settings()?,
        out_path: tmp_path.clone(),
    };
    let records = run_baseline(&problems, &cfg).await.map_err(module_error("distill"))?;
    std::fs::rename(&tmp_path, &out_path).map_err(crate::io_error(&out_path))?;

    let compiled = records.iter().filter(|r| r.compiled).count();
    let stats = counters([
        ("problems", problems.len() as u64),
        ("records", records.len() as u64),
        ("compiled", compiled as u64),
    ]);
    ctx.write_manifest(&out_dir, &stats)?;

    println!(
        "{}",
        json!({
            "out": out_path.display().to_string(),
            "problems": problems.len(),
            "records": records.len(),
            "compiled": compiled,
        })
    );
    Ok(())
}
