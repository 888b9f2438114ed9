//! One module per subcommand. Each takes the merged, validated config via
//! a [`RunContext`], does its work, writes a run manifest into every
//! artifact directory it produced, and prints a short machine-readable
//! summary to stdout (tables for the reporting commands).

pub mod baseline;
pub mod curate;
pub mod distill;
pub mod eval;
pub mod merge;
pub mod search;
pub mod sweep;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use crate::config::{config_hash, Config};
use crate::manifest::{tool_versions, write_run_manifest, RunManifest};
use crate::seeds::SeedRegistry;
use crate::CliError;

pub struct RunContext {
    pub run_id: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: Config,
    pub config_hash: String,
    pub seeds: SeedRegistry,
    pub started: Instant,
}

impl RunContext {
    pub fn new(subcommand: &str, argv: Vec<String>, config: Config) -> Self {
        let hash = config_hash(&config);
        let seed = config.run.seed;
        RunContext {
            run_id: uuid::Uuid::new_v4().to_string(),
            subcommand: subcommand.to_string(),
            argv,
            config,
            config_hash: hash,
            seeds: SeedRegistry::new(seed),
            started: Instant::now(),
        }
    }

    /// Stamps `dir` with this run's manifest. Commands call it once per
    /// artifact directory, after the artifacts are in place (the search
    /// server calls it before blocking on its listen loop).
    pub fn write_manifest(
        &self,
        dir: &Path,
        counters: &BTreeMap<String, u64>,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            run_id: self.run_id.clone(),
            subcommand: self.subcommand.clone(),
            command: self.argv.clone(),
            config_hash: self.config_hash.clone(),
            config: self.config.clone(),
            tool_versions: tool_versions(),
            seeds: self.seeds.clone(),
            counters: counters.clone(),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        write_run_manifest(dir, &manifest)
    }
}

pub(crate) fn counters<const N: usize>(pairs: [(&str, u64); N]) -> BTreeMap<String, u64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
