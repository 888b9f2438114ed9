//! `sweep`: merge at a ladder of interpolation fractions, score each
//! checkpoint through the optional evaluation hook, and print the table.

use tensor_merge::{load_tensors, render_table, run_sweep, SweepConfig};

use super::{counters, RunContext};
use crate::{module_error, CliError};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let section = &ctx.config.sweep;
    let a_path = section.a.clone().ok_or_else(|| CliError::missing("sweep.a", "--a"))?;
    let b_path = section.b.clone().ok_or_else(|| CliError::missing("sweep.b", "--b"))?;
    let ts_raw = section.ts.clone().ok_or_else(|| CliError::missing("sweep.ts", "--ts"))?;
    let ts = parse_ts(&ts_raw)?;
    let out_dir =
        section.out_dir.clone().unwrap_or_else(|| ctx.config.run.out_dir.join("sweep"));

    let a = load_tensors(&a_path).map_err(module_error("tensor-merge"))?;
    let b = load_tensors(&b_path).map_err(module_error("tensor-merge"))?;
    let config = SweepConfig {
        ts,
        eps: section.eps,
        exclude: section.exclude.clone(),
        eval_command: section.eval_cmd.clone(),
        out_dir: out_dir.clone(),
    };
    let outcome = run_sweep(&a, &b, &config).map_err(module_error("tensor-merge"))?;

    let eval_failures = outcome.rows.iter().filter(|r| r.eval_error.is_some()).count();
    let stats = counters([
        ("points", outcome.rows.len() as u64),
        ("eval_failures", eval_failures as u64),
    ]);
    ctx.write_manifest(&out_dir, &stats)?;

    print!("{}", render_table(&outcome));
    Ok(())
}

/// Sweep points: `start:end:step` (inclusive of both ends), a comma list,
/// or a single fraction.
pub fn parse_ts(raw: &str) -> Result<Vec<f64>, CliError> {
    let bad = |reason: String| CliError::Usage(format!("--ts `{raw}`: {reason}"));
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is start:end:step".into()));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("not a number: {e}")))?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) {
            return Err(bad("step must be positive".into()));
        }
        if end < start {
            return Err(bad("end is below start".into()));
        }
        // Integer stepping avoids drift; the slack absorbs representation
        // error so 0:1:0.1 yields eleven points, not ten.
        let count = ((end - start) / step + 1e-9).floor() as usize;
        let ts = (0..=count)
            .map(|i| {
                let t = start + i as f64 * step;
                if t > end {
                    end
                } else {
                    t
                }
            })
            .collect();
        return Ok(ts);
    }
    let ts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("not a number: {e}")))?;
    if ts.is_empty() {
        return Err(bad("no points given".into()));
    }
    Ok(ts)
}
