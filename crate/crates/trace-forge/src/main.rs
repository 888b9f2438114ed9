//! trace-forge: orchestrates the trace distillation toolkit from one
//! binary. Every subcommand reads the same TOML config schema; dedicated
//! flags mirror config keys and `--set key=value` patches arbitrary ones.
//! Exit codes: 0 success, 1 fatal error, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing::Instrument;

use trace_forge::commands::{self, RunContext};
use trace_forge::config::{self, Config};
use trace_forge::CliError;

#[derive(Parser)]
#[command(
    name = "trace-forge",
    version,
    about = "Agentic trace distillation, curation, evaluation, retrieval, and checkpoint merging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags and --set override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set distill.workers=8. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the four-stage trace distillation pipeline.
    Distill {
        #[command(flatten)]
        common: Common,
        /// Problems JSONL; mirrors distill.problems.
        #[arg(long)]
        problems: Option<PathBuf>,
        /// Artifact directory; mirrors distill.out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Select a stratified, quality-weighted training subset.
    Curate {
        #[command(flatten)]
        common: Common,
        /// Trace dataset JSONL; mirrors curate.input.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Subset size; mirrors curate.n_total.
        #[arg(long)]
        n: Option<usize>,
        /// Global seed; mirrors run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Artifact directory; mirrors curate.out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compute pass@k, compliance, grounding, and support metrics.
    Eval {
        #[command(flatten)]
        common: Common,
        /// GenerationRecords JSONL; mirrors eval.records.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Tool-free baseline records; mirrors eval.baselines.
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// Corpus whose names form the identifier universe; mirrors eval.corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// pass@k cutoffs; repeatable; mirrors eval.ks.
        #[arg(long = "k")]
        ks: Vec<u64>,
        /// Artifact directory; mirrors eval.out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build the vector index and serve retrieval over HTTP.
    ServeSearch {
        #[command(flatten)]
        common: Common,
        /// Theorem corpus JSONL; mirrors index.corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Index persistence directory; mirrors index.index_dir.
        #[arg(long)]
        index_dir: Option<PathBuf>,
        /// Listen address, e.g. 127.0.0.1:7878; mirrors index.bind.
        #[arg(long)]
        bind: Option<String>,
        /// Embedding dimension; mirrors index.dimension.
        #[arg(long)]
        dimension: Option<usize>,
    },
    /// Build (or reuse) the persisted vector index without serving.
    BuildIndex {
        #[command(flatten)]
        common: Common,
        /// Theorem corpus JSONL; mirrors index.corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Index persistence directory; mirrors index.index_dir.
        #[arg(long)]
        index_dir: Option<PathBuf>,
        /// Embedding dimension; mirrors index.dimension.
        #[arg(long)]
        dimension: Option<usize>,
    },
    /// Merge two checkpoints by spherical interpolation at one fraction.
    Merge {
        #[command(flatten)]
        common: Common,
        /// First checkpoint; mirrors merge.a.
        #[arg(long)]
        a: Option<PathBuf>,
        /// Second checkpoint; mirrors merge.b.
        #[arg(long)]
        b: Option<PathBuf>,
        /// Interpolation fraction in [0, 1]; mirrors merge.t.
        #[arg(long)]
        t: Option<f64>,
        /// Output checkpoint path; mirrors merge.out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Antipodal fallback threshold; mirrors merge.eps.
        #[arg(long)]
        eps: Option<f64>,
        /// Glob of tensor names copied without interpolation; repeatable;
        /// mirrors merge.exclude.
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Merge at a ladder of fractions and score each through a hook.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// First checkpoint; mirrors sweep.a.
        #[arg(long)]
        a: Option<PathBuf>,
        /// Second checkpoint; mirrors sweep.b.
        #[arg(long)]
        b: Option<PathBuf>,
        /// Fractions: start:end:step, comma list, or one value; mirrors sweep.ts.
        #[arg(long)]
        ts: Option<String>,
        /// Shell command scoring each checkpoint ({checkpoint} expands);
        /// mirrors sweep.eval_cmd.
        #[arg(long)]
        eval_cmd: Option<String>,
        /// Artifact directory; mirrors sweep.out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Antipodal fallback threshold; mirrors sweep.eps.
        #[arg(long)]
        eps: Option<f64>,
        /// Glob of tensor names copied without interpolation; repeatable;
        /// mirrors sweep.exclude.
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Sample tool-free generations to measure generative support.
    BaselineGen {
        #[command(flatten)]
        common: Common,
        /// Problems JSONL; mirrors baseline.problems.
        #[arg(long)]
        problems: Option<PathBuf>,
        /// Corpus whose names form the identifier universe; mirrors baseline.corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Artifact directory; mirrors baseline.out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Distill { .. } => "distill",
            Command::Curate { .. } => "curate",
            Command::Eval { .. } => "eval",
            Command::ServeSearch { .. } => "serve-search",
            Command::BuildIndex { .. } => "build-index",
            Command::Merge { .. } => "merge",
            Command::Sweep { .. } => "sweep",
            Command::BaselineGen { .. } => "baseline-gen",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Distill { common, .. }
            | Command::Curate { common, .. }
            | Command::Eval { common, .. }
            | Command::ServeSearch { common, .. }
            | Command::BuildIndex { common, .. }
            | Command::Merge { common, .. }
            | Command::Sweep { common, .. }
            | Command::BaselineGen { common, .. } => common,
        }
    }

    /// Dedicated flags override whatever the file and --set produced.
    fn apply_flags(&self, config: &mut Config) {
        fn set<T>(target: &mut Option<T>, value: &Option<T>)
        where
            T: Clone,
        {
            if let Some(v) = value {
                *target = Some(v.clone());
            }
        }
        match self {
            Command::Distill { problems, out_dir, .. } => {
                set(&mut config.distill.problems, problems);
                set(&mut config.distill.out_dir, out_dir);
            }
            Command::Curate { input, n, seed, out_dir, .. } => {
                set(&mut config.curate.input, input);
                set(&mut config.curate.n_total, n);
                set(&mut config.curate.out_dir, out_dir);
                if let Some(seed) = seed {
                    config.run.seed = *seed;
                }
            }
            Command::Eval { records, baselines, corpus, ks, out_dir, .. } => {
                set(&mut config.eval.records, records);
                set(&mut config.eval.baselines, baselines);
                set(&mut config.eval.corpus, corpus);
                set(&mut config.eval.out_dir, out_dir);
                if !ks.is_empty() {
                    config.eval.ks = ks.clone();
                }
            }
            Command::ServeSearch { corpus, index_dir, bind, dimension, .. } => {
                set(&mut config.index.corpus, corpus);
                set(&mut config.index.index_dir, index_dir);
                set(&mut config.index.bind, bind);
                set(&mut config.index.dimension, dimension);
            }
            Command::BuildIndex { corpus, index_dir, dimension, .. } => {
                set(&mut config.index.corpus, corpus);
                set(&mut config.index.index_dir, index_dir);
                set(&mut config.index.dimension, dimension);
            }
            Command::Merge { a, b, t, out, eps, exclude, .. } => {
                set(&mut config.merge.a, a);
                set(&mut config.merge.b, b);
                set(&mut config.merge.t, t);
                set(&mut config.merge.out, out);
                if let Some(eps) = eps {
                    config.merge.eps = *eps;
                }
                if !exclude.is_empty() {
                    config.merge.exclude = exclude.clone();
                }
            }
            Command::Sweep { a, b, ts, eval_cmd, out_dir, eps, exclude, .. } => {
                set(&mut config.sweep.a, a);
                set(&mut config.sweep.b, b);
                set(&mut config.sweep.ts, ts);
                set(&mut config.sweep.eval_cmd, eval_cmd);
                set(&mut config.sweep.out_dir, out_dir);
                if let Some(eps) = eps {
                    config.sweep.eps = *eps;
                }
                if !exclude.is_empty() {
                    config.sweep.exclude = exclude.clone();
                }
            }
            Command::BaselineGen { problems, corpus, out_dir, .. } => {
                set(&mut config.baseline.problems, problems);
                set(&mut config.baseline.corpus, corpus);
                set(&mut config.baseline.out_dir, out_dir);
            }
        }
    }
}

fn init_tracing() {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_tracing();

    let run_id = uuid::Uuid::new_v4().to_string();
    let span = tracing::info_span!("run", run_id = %run_id, subcommand = cli.command.name());
    let _guard = span.enter();

    match execute(cli.command, run_id) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(error = %e, "run failed");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command, run_id: String) -> Result<(), CliError> {
    let common = command.common();
    let mut config = config::load_config(common.config.as_deref(), &common.set)?;
    command.apply_flags(&mut config);
    config::validate(&config)?;

    let argv: Vec<String> = std::env::args().collect();
    let mut ctx = RunContext::new(command.name(), argv, config);
    ctx.run_id = run_id;
    tracing::info!(config_hash = %ctx.config_hash, "configuration validated");

    match &command {
        Command::Distill { .. } => block_on(commands::distill::run(&mut ctx)),
        Command::Curate { .. } => commands::curate::run(&mut ctx),
        Command::Eval { .. } => commands::eval::run(&mut ctx),
        Command::ServeSearch { .. } => block_on(commands::search::run_serve_search(&mut ctx)),
        Command::BuildIndex { .. } => block_on(commands::search::run_build_index(&mut ctx)),
        Command::Merge { .. } => commands::merge::run(&mut ctx),
        Command::Sweep { .. } => commands::sweep::run(&mut ctx),
        Command::BaselineGen { .. } => block_on(commands::baseline::run(&mut ctx)),
    }
}

/// Async commands run on a fresh multi-thread runtime, instrumented so
/// their log lines keep the run span.
fn block_on<F>(future: F) -> Result<(), CliError>
where
    F: std::future::Future<Output = Result<(), CliError>>,
{
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Module { module: "tokio", reason: e.to_string() })?;
    runtime.block_on(future.instrument(tracing::Span::current()))
}
