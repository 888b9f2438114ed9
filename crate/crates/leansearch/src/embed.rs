//! Embedding backends for the index: a remote OpenAI-compatible model and a
//! deterministic hashing embedder for tests and offline smoke runs.

use async_trait::async_trait;
use model_client::{EmbedRequest, ModelClient};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct EmbedderError(pub String);

#[async_trait]
pub trait Embedder: Send + Sync {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedderError>;

    /// Output dimension when known ahead of the first call.
    fn dimension(&self) -> Option<usize> {
        None
    }
}

/// Embeds through a remote /v1/embeddings endpoint.
pub struct RemoteEmbedder {
    pub client: ModelClient,
    pub base_url: String,
    pub model: String,
    pub dimension: Option<usize>,
}

#[async_trait]
impl Embedder for RemoteEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedderError> {
        let reqs: Vec<EmbedRequest> = texts
            .iter()
            .map(|t| EmbedRequest { text: t.clone(), instruction: String::new() })
            .collect();
        self.client
            .embed_batch(&self.base_url, &self.model, &reqs, self.dimension)
            .await
            .map_err(|e| EmbedderError(e.to_string()))
    }

    fn dimension(&self) -> Option<usize> {
        self.dimension
    }
}

/// Feature-hashed bag of words: each lowercased token adds ±1 to one
/// coordinate chosen by its sha256. Deterministic across runs and platforms,
/// and overlapping vocabularies score higher under cosine, which is all the
/// tests and smoke runs need.
pub struct HashEmbedder {
    pub dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f32; self.dimension];
        for token in text
            .to_lowercase()
            .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
            .filter(|t| !t.is_empty())
        {
            let digest = Sha256::digest(token.as_bytes());
            let h = u64::from_le_bytes(digest[..8].try_into().unwrap());
            let idx = (h % self.dimension as u64) as usize;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            v[idx] += sign;
        }
        v
    }
}

#[async_trait]
impl Embedder for HashEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dimension)
    }
}
