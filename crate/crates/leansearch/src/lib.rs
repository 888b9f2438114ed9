//! Theorem retrieval: corpus ingestion, embedding, an exact cosine index,
//! and an HTTP service speaking the leansearch tool protocol.

mod client;
mod corpus;
mod embed;
mod index;
mod server;

pub use client::SearchClient;
pub use corpus::{corpus_checksum, ingest_corpus, Corpus, TheoremDoc};
pub use embed::{Embedder, EmbedderError, HashEmbedder, RemoteEmbedder};
pub use index::{
    build_index, load_index, BuildStats, IndexConfig, SearchHit, VectorIndex,
    DEFAULT_DOC_TEMPLATE, DEFAULT_QUERY_INSTRUCTION, DOCS_FILE, META_FILE, VECTORS_FILE,
};
pub use server::{router, serve, ServerState, DEFAULT_TOP_K, MAX_TOP_K};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("corpus line {line}: duplicate theorem name {name}")]
    DuplicateName { line: usize, name: String },
    #[error("embedding {doc} failed: {reason}")]
    Embed { doc: String, reason: String },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("zero-norm embedding for {what}")]
    ZeroNorm { what: String },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("query must be non-empty")]
    EmptyQuery,
    #[error("search service returned {status}: {body}")]
    Service { status: u16, body: String },
    #[error("search service unreachable: {0}")]
    Unreachable(String),
}
