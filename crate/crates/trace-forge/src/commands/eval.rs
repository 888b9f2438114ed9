//! `eval`: compute the metric report over a generations file. Writes
//! `report.json` and `report.txt` and prints the plain-text table, which
//! is byte-identical to the file.

use std::collections::BTreeSet;
use std::path::Path;

use eval_metrics::{compute_report, group_by_problem, read_generations_jsonl, MetricReport};
use leansearch::ingest_corpus;

use super::{counters, RunContext};
use crate::manifest::atomic_write;
use crate::{module_error, CliError};

pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";

/// The exact bytes `report.json` holds, shared with the golden fixture
/// generator so the two can never drift.
pub fn report_json_bytes(report: &MetricReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let section = &ctx.config.eval;
    let records_path =
        section.records.clone().ok_or_else(|| CliError::missing("eval.records", "--records"))?;
    let out_dir = section
        .out_dir
        .clone()
        .unwrap_or_else(|| ctx.config.run.out_dir.join("eval"));

    let records = read_generations_jsonl(&records_path).map_err(module_error("eval-metrics"))?;
    let baselines = match &section.baselines {
        Some(path) => read_generations_jsonl(path).map_err(module_error("eval-metrics"))?,
        None => Vec::new(),
    };
    let universe = match &section.corpus {
        Some(path) => universe_from_corpus(path)?,
        None => BTreeSet::new(),
    };

    let report = compute_report(&records, &baselines, &universe, &section.ks)
        .map_err(module_error("eval-metrics"))?;
    let text = report.render();

    std::fs::create_dir_all(&out_dir).map_err(crate::io_error(&out_dir))?;
    atomic_write(&out_dir.join(REPORT_JSON_FILE), &report_json_bytes(&report))?;
    atomic_write(&out_dir.join(REPORT_TEXT_FILE), text.as_bytes())?;

    let stats = counters([
        ("records", records.len() as u64),
        ("problems", group_by_problem(&records).len() as u64),
        ("baseline_records", baselines.len() as u64),
        ("universe_size", universe.len() as u64),
    ]);
    ctx.write_manifest(&out_dir, &stats)?;

    print!("{text}");
    Ok(())
}

/// Theorem names of a retrieval corpus, used as the identifier universe.
pub fn universe_from_corpus(path: &Path) -> Result<BTreeSet<String>, CliError> {
    let corpus = ingest_corpus(path).map_err(module_error("leansearch"))?;
    Ok(corpus.docs.into_iter().map(|d| d.name).collect())
}
