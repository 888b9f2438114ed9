//! Run manifests: every artifact directory gets a `run_manifest.json`
//! recording the run id, the exact command, the effective config and its
//! hash, tool versions, consumed seeds, per-stage counters, and wall-clock
//! time. Volatile by design; reproducible pipeline outputs (datasets,
//! reports) live in their own files and never embed run-specific noise.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::seeds::SeedRegistry;
use crate::CliError;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub subcommand: String,
    /// Argv as invoked; with `config` below this re-derives the run.
    pub command: Vec<String>,
    pub config_hash: String,
    pub config: Config,
    pub tool_versions: BTreeMap<String, String>,
    pub seeds: SeedRegistry,
    pub counters: BTreeMap<String, u64>,
    pub wall_clock_secs: f64,
}

/// All workspace crates ship with one version, so the registry lists each
/// component at the compiled version of this binary.
pub fn tool_versions() -> BTreeMap<String, String> {
    let version = env!("CARGO_PKG_VERSION").to_string();
    [
        "trace-forge",
        "trace-model",
        "model-client",
        "leansearch",
        "lean-check",
        "distill",
        "curate",
        "eval-metrics",
        "tensor-merge",
    ]
    .into_iter()
    .map(|name| (name.to_string(), version.clone()))
    .collect()
}

/// Temp-then-rename write; a crash can leave a `.tmp` file but never a
/// truncated artifact under the real name.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = temp_sibling(path);
    std::fs::write(&tmp, bytes).map_err(crate::io_error(&tmp))?;
    std::fs::rename(&tmp, path).map_err(crate::io_error(path))?;
    Ok(())
}

fn temp_sibling(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_run_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(crate::io_error(dir))?;
    let mut bytes = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    bytes.push(b'\n');
    atomic_write(&dir.join(RUN_MANIFEST_FILE), &bytes)
}
