//! Interpolation sweep: merge at each requested fraction, hand every
//! checkpoint to an evaluation hook, and tabulate what comes back.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use crate::container::{save_tensors, TensorSet};
use crate::slerp::{merge_checkpoints, MergeReport, MergeSpec};
use crate::MergeError;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Fractions to evaluate; duplicates are dropped with a warning.
    pub ts: Vec<f64>,
    pub eps: f64,
    pub exclude: Vec<String>,
    /// Shell command run once per checkpoint; `{checkpoint}` expands to the
    /// written file path. Stdout must be a JSON object of metric values.
    pub eval_command: Option<String>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub checkpoint: PathBuf,
    pub report: MergeReport,
    /// Metrics parsed from the hook's stdout, when the hook ran and parsed.
    pub metrics: Option<serde_json::Value>,
    /// Hook failure description; merging still succeeded.
    pub eval_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
}

fn checkpoint_name(t: f64) -> String {
    format!("merged_t{:.4}.tensors", t)
}

fn run_eval_hook(command: &str, checkpoint: &Path) -> Result<serde_json::Value, String> {
    let expanded = command.replace("{checkpoint}", &checkpoint.display().to_string());
    let output = Command::new("sh")
        .arg("-c")
        .arg(&expanded)
        .output()
        .map_err(|e| format!("hook failed to spawn: {e}"))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(format!(
            "hook exited with {}: {}",
            output.status,
            stderr.trim().chars().take(400).collect::<String>()
        ));
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(stdout.trim())
        .map_err(|e| format!("hook stdout was not a JSON object: {e}"))
}

/// Runs the sweep. Per-point evaluation failures are recorded in the row and
/// the sweep continues; only merge-level errors abort.
pub fn run_sweep(a: &TensorSet, b: &TensorSet, config: &SweepConfig) -> Result<SweepOutcome, MergeError> {
    if config.ts.is_empty() {
        return Err(MergeError::InvalidSpec("sweep needs at least one t value".into()));
    }
    let mut ts: Vec<f64> = Vec::new();
    for &t in &config.ts {
        if ts.iter().any(|seen| *seen == t) {
            tracing::warn!(t, "duplicate sweep point dropped");
            continue;
        }
        ts.push(t);
    }

    std::fs::create_dir_all(&config.out_dir)?;
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let spec = MergeSpec { t, eps: config.eps };
        let (merged, report) = merge_checkpoints(a, b, &spec, &config.exclude)?;
        let checkpoint = config.out_dir.join(checkpoint_name(t));
        save_tensors(&merged, &checkpoint)?;

        let (metrics, eval_error) = match &config.eval_command {
            None => (None, None),
            Some(cmd) => match run_eval_hook(cmd, &checkpoint) {
                Ok(value) => (Some(value), None),
                Err(reason) => {
                    tracing::warn!(t, %reason, "evaluation hook failed; continuing sweep");
                    (None, Some(reason))
                }
            },
        };
        rows.push(SweepRow { t, checkpoint, report, metrics, eval_error });
    }

    let outcome = SweepOutcome { rows };
    let summary_path = config.out_dir.join("sweep.json");
    let json = serde_json::to_vec_pretty(&outcome).expect("sweep outcome serializes");
    std::fs::write(&summary_path, json)?;
    Ok(outcome)
}

/// Plain-text table of the sweep: one line per point, metric keys unioned
/// across rows in sorted order.
pub fn render_table(outcome: &SweepOutcome) -> String {
    let mut keys: Vec<String> = Vec::new();
    for row in &outcome.rows {
        if let Some(serde_json::Value::Object(map)) = &row.metrics {
            for key in map.keys() {
                if !keys.contains(key) {
                    keys.push(key.clone());
                }
            }
        }
    }
    keys.sort();

    let mut out = String::new();
    out.push_str(&format!("{:<8}", "t"));
    for key in &keys {
        out.push_str(&format!(" {:>12}", key));
    }
    out.push_str(" status\n");
    for row in &outcome.rows {
        out.push_str(&format!("{:<8.4}", row.t));
        for key in &keys {
            let cell = row
                .metrics
                .as_ref()
                .and_then(|m| m.get(key))
                .map(|v| match v {
                    serde_json::Value::Number(n) => format!("{n}"),
                    other => other.to_string(),
                })
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(" {cell:>12}"));
        }
        match &row.eval_error {
            None => out.push_str(" ok\n"),
            Some(reason) => {
                let short: String = reason.chars().take(60).collect();
                out.push_str(&format!(" eval failed: {short}\n"));
            }
        }
    }
    out
}
