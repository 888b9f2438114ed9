//! `merge`: spherically interpolate two checkpoints at one fraction and
//! write the blended checkpoint.

use serde_json::json;
use tensor_merge::{load_tensors, merge_checkpoints, save_tensors, MergeSpec};

use super::{counters, RunContext};
use crate::{module_error, CliError};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let section = &ctx.config.merge;
    let a_path = section.a.clone().ok_or_else(|| CliError::missing("merge.a", "--a"))?;
    let b_path = section.b.clone().ok_or_else(|| CliError::missing("merge.b", "--b"))?;
    let t = section.t.ok_or_else(|| CliError::missing("merge.t", "--t"))?;
    let out = section.out.clone().ok_or_else(|| CliError::missing("merge.out", "--out"))?;

    let a = load_tensors(&a_path).map_err(module_error("tensor-merge"))?;
    let b = load_tensors(&b_path).map_err(module_error("tensor-merge"))?;
    let spec = MergeSpec { t, eps: section.eps };
    let (merged, report) =
        merge_checkpoints(&a, &b, &spec, &section.exclude).map_err(module_error("tensor-merge"))?;

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(crate::io_error(parent))?;
    }
    let mut tmp_name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = out.with_file_name(tmp_name);
    save_tensors(&merged, &tmp).map_err(module_error("tensor-merge"))?;
    std::fs::rename(&tmp, &out).map_err(crate::io_error(&out))?;

    let stats = counters([
        ("tensors", report.tensor_count as u64),
        ("slerped", report.slerped as u64),
        ("lerp_fallback", report.lerp_fallback as u64),
        ("copied_integer", report.copied_integer as u64),
        ("copied_excluded", report.copied_excluded as u64),
        ("copied_endpoint", report.copied_endpoint as u64),
    ]);
    let manifest_dir = out.parent().filter(|p| !p.as_os_str().is_empty());
    ctx.write_manifest(manifest_dir.unwrap_or(std::path::Path::new(".")), &stats)?;

    println!(
        "{}",
        json!({
            "out": out.display().to_string(),
            "report": report,
        })
    );
    Ok(())
}
