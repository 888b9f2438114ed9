//! `build-index` and `serve-search`: embed a theorem corpus into the
//! persisted vector index, and serve it over HTTP. Serving prints a
//! `{"listening": "http://..."}` line once bound so callers (and tests
//! binding port 0) can discover the address.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use leansearch::{
    build_index, ingest_corpus, serve, Embedder, HashEmbedder, IndexConfig, RemoteEmbedder,
    ServerState,
};
use model_client::ModelClient;
use serde_json::json;

use super::{counters, RunContext};
use crate::{module_error, CliError};

const DEFAULT_HASH_DIMENSION: usize = 256;

fn embedder_from(ctx: &RunContext) -> Box<dyn Embedder> {
    let embeddings = ctx.config.endpoints.embeddings.as_ref();
    if let Some(section) = embeddings {
        if let Some(base_url) = &section.base_url {
            return Box::new(RemoteEmbedder {
                client: ModelClient::builder().api_key_from_env().build(),
                base_url: base_url.clone(),
                model: section.model.clone().unwrap_or_default(),
                dimension: section.dimension.or(ctx.config.index.dimension),
            });
        }
    }
    let dimension = embeddings
        .and_then(|s| s.dimension)
        .or(ctx.config.index.dimension)
        .unwrap_or(DEFAULT_HASH_DIMENSION);
    Box::new(HashEmbedder::new(dimension))
}

struct BuiltIndex {
    state: Arc<ServerState>,
    index_dir: PathBuf,
    docs: u64,
    embedded_docs: u64,
    reused: bool,
}

async fn build(ctx: &RunContext) -> Result<BuiltIndex, CliError> {
    let corpus_path = ctx
        .config
        .index
        .corpus
        .clone()
        .ok_or_else(|| CliError::missing("index.corpus", "--corpus"))?;
    let index_dir = ctx
        .config
        .index
        .index_dir
        .clone()
        .ok_or_else(|| CliError::missing("index.index_dir", "--index-dir"))?;

    let corpus = ingest_corpus(&corpus_path).map_err(module_error("leansearch"))?;
    let embedder = embedder_from(ctx);
    let index_config = IndexConfig {
        dimension: ctx.config.index.dimension,
        batch_size: ctx.config.index.batch_size,
        ..IndexConfig::default()
    };
    let (index, stats) = build_index(&corpus, embedder.as_ref(), &index_config, &index_dir)
        .await
        .map_err(module_error("leansearch"))?;
    tracing::info!(
        docs = index.len(),
        reused = stats.reused,
        index_dir = %index_dir.display(),
        "index ready"
    );
    Ok(BuiltIndex {
        docs: index.len() as u64,
        embedded_docs: stats.embedded_docs as u64,
        reused: stats.reused,
        state: Arc::new(ServerState { index, embedder }),
        index_dir,
    })
}

pub async fn run_build_index(ctx: &mut RunContext) -> Result<(), CliError> {
    let built = build(ctx).await?;
    let stats = counters([
        ("docs", built.docs),
        ("embedded_docs", built.embedded_docs),
        ("reused", u64::from(built.reused)),
    ]);
    ctx.write_manifest(&built.index_dir, &stats)?;
    println!(
        "{}",
        json!({
            "index_dir": built.index_dir.display().to_string(),
            "docs": built.docs,
            "dimension": built.state.index.dimension(),
            "reused": built.reused,
        })
    );
    Ok(())
}

pub async fn run_serve_search(ctx: &mut RunContext) -> Result<(), CliError> {
    let bind = ctx
        .config
        .index
        .bind
        .clone()
        .ok_or_else(|| CliError::missing("index.bind", "--bind"))?;
    let addr: SocketAddr = bind
        .parse()
        .map_err(|e| CliError::config("index.bind", format!("invalid listen address: {e}")))?;

    let built = build(ctx).await?;
    let stats = counters([
        ("docs", built.docs),
        ("embedded_docs", built.embedded_docs),
        ("reused", u64::from(built.reused)),
    ]);
    // Manifest before blocking: the directory is complete once we serve.
    ctx.write_manifest(&built.index_dir, &stats)?;

    let (bound, mut handle) = serve(built.state, addr).await.map_err(crate::io_error(
        std::path::Path::new("serve-search"),
    ))?;
    println!("{}", json!({ "listening": format!("http://{bound}") }));
    use std::io::Write;
    std::io::stdout().flush().ok();
    tracing::info!(%bound, "search service listening");

    tokio::select! {
        _ = tokio::signal::ctrl_c() => {
            tracing::info!("shutting down on interrupt");
            handle.abort();
            Ok(())
        }
        result = &mut handle => {
            Err(CliError::Module {
                module: "leansearch",
                reason: format!("server task ended unexpectedly: {result:?}"),
            })
        }
    }
}
