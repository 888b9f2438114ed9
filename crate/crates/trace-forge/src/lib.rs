//! CLI orchestrator for the trace pipeline: one binary wiring configuration,
//! subcommands, structured logging, and run manifests over the library
//! crates (distillation, curation, metrics, retrieval, checkpoint merging).
//!
//! The binary is a thin shell; everything testable lives here. `config`
//! owns the TOML schema, environment interpolation, `--set` overrides, and
//! cross-field validation. `seeds` derives per-module seeds from the global
//! one. `manifest` records what a run did. `commands` holds one module per
//! subcommand.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod seeds;

use std::path::PathBuf;

/// Top-level failure. `exit_code` maps variants onto the CLI contract:
/// usage problems exit 2, everything else fatal exits 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A config key is missing, malformed, or inconsistent with another.
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },
    /// The invocation itself is wrong (missing required value, bad --set).
    #[error("{0}")]
    Usage(String),
    /// A library crate failed; the module name attributes the error.
    #[error("{module}: {reason}")]
    Module { module: &'static str, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), reason: reason.into() }
    }

    /// Missing required input that could come from either a flag or a
    /// config key; phrased as a usage error so it exits 2.
    pub fn missing(key: &str, flag: &str) -> Self {
        CliError::Usage(format!("missing required value: pass `{flag}` or set config key `{key}`"))
    }
}

/// Adapter for wrapping a module error with its crate attribution.
pub fn module_error<E: std::fmt::Display>(module: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Module { module, reason: e.to_string() }
}

pub fn io_error(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}
