//! `curate`: select a quality-weighted, stratified subset of a trace
//! dataset. Emits `subset.jsonl` (canonical renderings of the selected
//! traces, selection order) and `curation_report.json`.

use std::collections::BTreeSet;

use curate::{CurationConfig, ScoreWeights};
use serde_json::json;
use trace_model::{parse_trace, AgentTrace, RenderOptions};

use super::{counters, RunContext};
use crate::config::parse_strata;
use crate::manifest::atomic_write;
use crate::{module_error, CliError};

pub const SUBSET_FILE: &str = "subset.jsonl";
pub const REPORT_FILE: &str = "curation_report.json";

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let section = ctx.config.curate.clone();
    let input = section.input.clone().ok_or_else(|| CliError::missing("curate.input", "--in"))?;
    let n_total = section.n_total.ok_or_else(|| CliError::missing("curate.n_total", "--n"))?;
    let out_dir =
        section.out_dir.clone().unwrap_or_else(|| ctx.config.run.out_dir.join("curate"));

    let records = trace_model::read_traces_jsonl(&input).map_err(module_error("trace-model"))?;
    let pool: Vec<AgentTrace> = records
        .into_iter()
        .map(|r| parse_trace(r.problem_id, r.messages))
        .collect::<Result<_, _>>()
        .map_err(module_error("trace-model"))?;

    let mut cfg = CurationConfig::new(n_total, ctx.seeds.seed_for("curate.sample"));
    if let Some(cap) = section.namespace_cap {
        cfg.namespace_cap = cap;
    }
    cfg.weights =
        ScoreWeights { alpha: section.alpha, beta: section.beta, gamma: section.gamma };
    if let Some(tactics) = &section.trivial_tactics {
        cfg.trivial_tactics = tactics.iter().cloned().collect::<BTreeSet<String>>();
    }
    if let Some(targets) = &section.strata_targets {
        cfg.strata_override = Some(parse_strata(targets)?);
    }

    let outcome = curate::curate(&pool, &cfg).map_err(module_error("curate"))?;

    std::fs::create_dir_all(&out_dir).map_err(crate::io_error(&out_dir))?;
    let render = RenderOptions::default();
    let mut subset = String::new();
    for trace in &outcome.selected {
        let record = trace.to_record(&render);
        subset.push_str(&serde_json::to_string(&record).expect("record serializes"));
        subset.push('\n');
    }
    atomic_write(&out_dir.join(SUBSET_FILE), subset.as_bytes())?;

    let mut report_bytes =
        serde_json::to_vec_pretty(&outcome.report).expect("report serializes");
    report_bytes.push(b'\n');
    atomic_write(&out_dir.join(REPORT_FILE), &report_bytes)?;

    let stats = counters([
        ("pool_size", outcome.report.pool_size as u64),
        ("dropped", outcome.report.dropped.total() as u64),
        ("eligible", outcome.report.eligible as u64),
        ("selected", outcome.report.selected as u64),
        ("shortfall", outcome.report.shortfall as u64),
    ]);
    ctx.write_manifest(&out_dir, &stats)?;

    println!(
        "{}",
        json!({
            "out_dir": out_dir.display().to_string(),
            "pool_size": outcome.report.pool_size,
            "eligible": outcome.report.eligible,
            "selected": outcome.report.selected,
            "seed": outcome.report.seed,
        })
    );
    Ok(())
}
