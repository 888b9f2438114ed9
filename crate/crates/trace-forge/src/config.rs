//! Run configuration: a single TOML schema shared by every subcommand.
//!
//! Resolution order, weakest to strongest: struct defaults, the config
//! file, `--set key=value` overrides, then dedicated CLI flags. String
//! values in the file may reference environment variables as `${VAR}`;
//! interpolation happens before anything is deserialized so secrets never
//! need to live on disk. Unknown keys anywhere in the tree are rejected so
//! a typo (`samplr` for `sampler`) fails loudly instead of silently using
//! a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use curate::Stratum;
use model_client::RetryPolicy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunSection,
    pub endpoints: EndpointsSection,
    pub search: SearchSection,
    pub index: IndexSection,
    pub distill: DistillSection,
    pub curate: CurateSection,
    pub baseline: BaselineSection,
    pub eval: EvalSection,
    pub merge: MergeSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Global seed; per-module seeds are derived from it, never used raw.
    pub seed: u64,
    /// Base directory for artifact output; subcommands append their own
    /// subdirectory unless given an explicit out_dir.
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 0, out_dir: PathBuf::from("runs") }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointsSection {
    pub generalist: Option<EndpointSection>,
    pub specialist: Option<EndpointSection>,
    pub embeddings: Option<EmbeddingsSection>,
    pub compiler: Option<CompilerSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EndpointSection {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_max_tokens() -> u32 {
    4096
}

impl EndpointSection {
    pub fn to_endpoint_config(&self) -> distill::EndpointConfig {
        distill::EndpointConfig {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

/// Embedding source for index building and search serving. With a base_url
/// the service embeds remotely; without one a deterministic feature-hash
/// embedder of `dimension` runs in process.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingsSection {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CompilerSection {
    /// "subprocess" (argv required) or "http" (endpoint required).
    pub kind: String,
    pub argv: Vec<String>,
    pub endpoint: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub timeout_secs: u64,
}

impl Default for CompilerSection {
    fn default() -> Self {
        CompilerSection {
            kind: "subprocess".into(),
            argv: Vec::new(),
            endpoint: None,
            cache_dir: None,
            concurrency: 4,
            timeout_secs: 120,
        }
    }
}

impl CompilerSection {
    pub fn to_compile_settings(&self) -> Result<distill::CompileSettings, CliError> {
        let backend = match self.kind.as_str() {
            "subprocess" => {
                if self.argv.is_empty() {
                    return Err(CliError::config(
                        "endpoints.compiler.argv",
                        "subprocess backend needs a non-empty argv",
                    ));
                }
                lean_check::CompileBackend::Subprocess { argv: self.argv.clone() }
            }
            "http" => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    CliError::config(
                        "endpoints.compiler.endpoint",
                        "http backend needs an endpoint URL",
                    )
                })?;
                lean_check::CompileBackend::Http { endpoint }
            }
            other => {
                return Err(CliError::config(
                    "endpoints.compiler.kind",
                    format!("must be \"subprocess\" or \"http\", got \"{other}\""),
                ))
            }
        };
        Ok(distill::CompileSettings {
            backend,
            cache_dir: self.cache_dir.clone(),
            concurrency: self.concurrency,
            timeout: Duration::from_secs(self.timeout_secs),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    /// Base URL of a running retrieval service (distillation's tool target).
    pub url: Option<String>,
    pub top_k: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection { url: None, top_k: distill::DEFAULT_SEARCH_TOP_K }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSection {
    pub corpus: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    /// Listen address for serve-search, e.g. "127.0.0.1:7878".
    pub bind: Option<String>,
    pub dimension: Option<usize>,
    pub batch_size: usize,
}

impl Default for IndexSection {
    fn default() -> Self {
        IndexSection {
            corpus: None,
            index_dir: None,
            bind: None,
            dimension: None,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DistillSection {
    pub problems: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub max_tool_rounds: usize,
    pub samples_per_problem: usize,
    pub statement_char_cap: usize,
    pub workers: usize,
    pub retry_max_attempts: u32,
    pub retry_base_delay_ms: u64,
    pub retry_multiplier: f64,
    pub retry_max_delay_ms: u64,
}

impl Default for DistillSection {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        DistillSection {
            problems: None,
            out_dir: None,
            max_tool_rounds: distill::DEFAULT_MAX_TOOL_ROUNDS,
            samples_per_problem: distill::DEFAULT_SAMPLES_PER_PROBLEM,
            statement_char_cap: distill::DEFAULT_STATEMENT_CHAR_CAP,
            workers: distill::DEFAULT_WORKERS,
            retry_max_attempts: retry.max_attempts,
            retry_base_delay_ms: retry.base_delay.as_millis() as u64,
            retry_multiplier: retry.multiplier,
            retry_max_delay_ms: retry.max_delay.as_millis() as u64,
        }
    }
}

impl DistillSection {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.retry_max_attempts,
            base_delay: Duration::from_millis(self.retry_base_delay_ms),
            multiplier: self.retry_multiplier,
            max_delay: Duration::from_millis(self.retry_max_delay_ms),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CurateSection {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub n_total: Option<usize>,
    pub namespace_cap: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub trivial_tactics: Option<Vec<String>>,
    /// Per-stratum targets keyed "1" | "2" | "3" | "4+"; must sum to n_total.
    pub strata_targets: Option<BTreeMap<String, usize>>,
}

impl Default for CurateSection {
    fn default() -> Self {
        let weights = curate::ScoreWeights::default();
        CurateSection {
            input: None,
            out_dir: None,
            n_total: None,
            namespace_cap: None,
            alpha: weights.alpha,
            beta: weights.beta,
            gamma: weights.gamma,
            trivial_tactics: None,
            strata_targets: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub problems: Option<PathBuf>,
    /// Corpus whose theorem names form the identifier universe.
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub samples_per_problem: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            problems: None,
            corpus: None,
            out_dir: None,
            samples_per_problem: distill::DEFAULT_SAMPLES_PER_PROBLEM,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub records: Option<PathBuf>,
    pub baselines: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub ks: Vec<u64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { records: None, baselines: None, corpus: None, out_dir: None, ks: vec![8, 32] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MergeSection {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub t: Option<f64>,
    pub out: Option<PathBuf>,
    pub eps: f64,
    pub exclude: Vec<String>,
}

impl Default for MergeSection {
    fn default() -> Self {
        MergeSection {
            a: None,
            b: None,
            t: None,
            out: None,
            eps: tensor_merge::DEFAULT_EPS,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    /// "start:end:step" inclusive range, or a comma list, or one value.
    pub ts: Option<String>,
    pub eval_cmd: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub eps: f64,
    pub exclude: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            a: None,
            b: None,
            ts: None,
            eval_cmd: None,
            out_dir: None,
            eps: tensor_merge::DEFAULT_EPS,
            exclude: Vec::new(),
        }
    }
}

/// Parses a `--set` argument into a (dotted key, raw value) pair.
pub fn parse_set_arg(raw: &str) -> Result<(String, String), CliError> {
    match raw.split_once('=') {
        Some((key, value)) if !key.trim().is_empty() => {
            Ok((key.trim().to_string(), value.to_string()))
        }
        _ => Err(CliError::Usage(format!("--set expects KEY=VALUE, got `{raw}`"))),
    }
}

/// Loads the config tree: file (optional), `${VAR}` interpolation, `--set`
/// overrides, then deserialization into the typed schema. Unknown keys are
/// rejected here with the offending key named in the error.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<Config, CliError> {
    let mut tree: toml::Table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(crate::io_error(p))?;
            toml::from_str(&text)
                .map_err(|e| CliError::config(p.display().to_string(), e.to_string()))?
        }
        None => toml::Table::new(),
    };
    interpolate_env_table(&mut tree, &mut String::new())?;
    for raw in sets {
        let (key, value) = parse_set_arg(raw)?;
        apply_set(&mut tree, &key, &value)?;
    }
    toml::Value::Table(tree)
        .try_into::<Config>()
        .map_err(|e| CliError::config("<config>", e.to_string()))
}

/// `validate_config` as the one-call form used by subcommands: load, apply
/// nothing else, run cross-field checks.
pub fn validate_config(path: &Path) -> Result<Config, CliError> {
    let config = load_config(Some(path), &[])?;
    validate(&config)?;
    Ok(config)
}

/// Cross-field and filesystem checks over the merged config. Runs after
/// flags are applied so it sees final values.
pub fn validate(config: &Config) -> Result<(), CliError> {
    if let Some(targets) = &config.curate.strata_targets {
        let parsed = parse_strata(targets)?;
        let sum: usize = parsed.values().sum();
        if let Some(n_total) = config.curate.n_total {
            if sum != n_total {
                return Err(CliError::config(
                    "curate.strata_targets",
                    format!("strata targets sum to {sum}, curate.n_total is {n_total}"),
                ));
            }
        }
    }
    if let Some(compiler) = &config.endpoints.compiler {
        compiler.to_compile_settings()?;
    }
    for (key, path) in referenced_input_paths(config) {
        if !path.exists() {
            return Err(CliError::config(
                key,
                format!("referenced path {} does not exist", path.display()),
            ));
        }
    }
    Ok(())
}

/// Every input path the config references; output directories are exempt
/// because commands create them.
fn referenced_input_paths(config: &Config) -> Vec<(&'static str, &Path)> {
    let mut paths: Vec<(&'static str, &Path)> = Vec::new();
    macro_rules! input {
        ($key:literal, $field:expr) => {
            if let Some(p) = &$field {
                paths.push(($key, p.as_path()));
            }
        };
    }
    input!("distill.problems", config.distill.problems);
    input!("curate.input", config.curate.input);
    input!("baseline.problems", config.baseline.problems);
    input!("baseline.corpus", config.baseline.corpus);
    input!("eval.records", config.eval.records);
    input!("eval.baselines", config.eval.baselines);
    input!("eval.corpus", config.eval.corpus);
    input!("index.corpus", config.index.corpus);
    input!("merge.a", config.merge.a);
    input!("merge.b", config.merge.b);
    input!("sweep.a", config.sweep.a);
    input!("sweep.b", config.sweep.b);
    paths
}

/// Maps the TOML stratum keys onto the curation module's strata.
pub fn parse_strata(
    targets: &BTreeMap<String, usize>,
) -> Result<BTreeMap<Stratum, usize>, CliError> {
    let mut out = BTreeMap::new();
    for (key, &count) in targets {
        let stratum = match key.as_str() {
            "1" => Stratum::One,
            "2" => Stratum::Two,
            "3" => Stratum::Three,
            "4+" => Stratum::FourPlus,
            other => {
                return Err(CliError::config(
                    "curate.strata_targets",
                    format!("unknown stratum `{other}` (expected 1, 2, 3, or 4+)"),
                ))
            }
        };
        out.insert(stratum, count);
    }
    Ok(out)
}

/// Hash of the effective config. Serialization order is fixed by the
/// struct definition (maps are BTreeMaps), so two files with reordered
/// keys, or a file plus equivalent `--set` overrides, hash identically.
pub fn config_hash(config: &Config) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn interpolate_env_table(table: &mut toml::Table, path: &mut String) -> Result<(), CliError> {
    let keys: Vec<String> = table.keys().cloned().collect();
    for key in keys {
        let prefix_len = path.len();
        if !path.is_empty() {
            path.push('.');
        }
        path.push_str(&key);
        interpolate_env_value(table.get_mut(&key).expect("key exists"), path)?;
        path.truncate(prefix_len);
    }
    Ok(())
}

fn interpolate_env_value(value: &mut toml::Value, path: &mut String) -> Result<(), CliError> {
    match value {
        toml::Value::String(s) => {
            *s = interpolate_env_str(s, path)?;
        }
        toml::Value::Table(t) => interpolate_env_table(t, path)?,
        toml::Value::Array(items) => {
            for item in items {
                interpolate_env_value(item, path)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Replaces every `${VAR}` occurrence with the environment value; an unset
/// variable is a config error naming both the key and the variable.
fn interpolate_env_str(input: &str, key_path: &str) -> Result<String, CliError> {
    let mut out = String::with_capacity(input.len());
    let mut rest = input;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let Some(end) = tail.find('}') else {
            return Err(CliError::config(
                key_path.to_string(),
                format!("unterminated ${{ in \"{input}\""),
            ));
        };
        let var = &tail[..end];
        let value = std::env::var(var).map_err(|_| {
            CliError::config(
                key_path.to_string(),
                format!("environment variable {var} is not set"),
            )
        })?;
        out.push_str(&value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Applies one `--set` pair onto the raw tree, creating intermediate tables
/// as needed. The value is parsed as TOML when it parses (numbers, bools,
/// arrays, inline tables) and kept as a string otherwise.
fn apply_set(tree: &mut toml::Table, key: &str, raw_value: &str) -> Result<(), CliError> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Usage(format!("--set key `{key}` has an empty path segment")));
    }
    let mut current = tree;
    for segment in &segments[..segments.len() - 1] {
        let entry = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            CliError::config(key.to_string(), format!("`{segment}` is not a table"))
        })?;
    }
    let leaf = segments[segments.len() - 1].to_string();
    current.insert(leaf, parse_toml_scalar(raw_value));
    Ok(())
}

fn parse_toml_scalar(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut table) => table.remove("v").expect("wrapped value parses"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
