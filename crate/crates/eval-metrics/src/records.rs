//! Per-sample generation records, the input to every metric.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::MetricError;

/// One generated proof attempt for one problem.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GenerationRecord {
    pub problem_id: String,
    pub sample_index: u32,
    pub compiled: bool,
    pub tool_call_executed: bool,
    /// Whole-token identifiers found in the proof, restricted to the name
    /// universe used at extraction time.
    pub used_identifiers: BTreeSet<String>,
    /// Theorem names the retrieval tool returned during this generation.
    pub retrieved_identifiers: BTreeSet<String>,
    pub proof_source: String,
}

impl GenerationRecord {
    /// Names both retrieved by the tool and present in the proof.
    pub fn retrieved_and_used(&self) -> BTreeSet<String> {
        self.used_identifiers.intersection(&self.retrieved_identifiers).cloned().collect()
    }

    pub fn is_grounded(&self) -> bool {
        self.used_identifiers.intersection(&self.retrieved_identifiers).next().is_some()
    }
}

pub fn read_generations_jsonl(path: &Path) -> Result<Vec<GenerationRecord>, MetricError> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(&line)
            .map_err(|e| MetricError::Line { line: i + 1, reason: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_generations_jsonl(
    path: &Path,
    records: &[GenerationRecord],
) -> Result<(), MetricError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| MetricError::Line { line: 0, reason: e.to_string() })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
