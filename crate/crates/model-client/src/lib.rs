//! Async client for OpenAI-compatible chat-completion and embedding servers.
//!
//! One client instance is shared by everything that talks to a model: it
//! enforces a global in-flight request cap, retries transient failures with
//! jittered exponential backoff, and authenticates with a bearer token taken
//! from the environment.
//!
//! Retry policy: up to `max_attempts` tries per request. HTTP 429 and 5xx
//! and transport errors are retryable; 401/403 fail immediately as [`ClientError::Auth`];
//! any other 4xx fails immediately. The n-th backoff delay is drawn uniformly
//! from [cap/2, cap] with cap = base * multiplier^n (clamped to `max_delay`),
//! so with the default multiplier of 2 successive delays never decrease.

use std::future::Future;
use std::pin::Pin;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use trace_model::ChatMessage;

/// Environment variable holding the bearer token for model endpoints.
pub const API_KEY_ENV: &str = "TRACEFORGE_API_KEY";

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub multiplier: f64,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            multiplier: 2.0,
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Backoff cap before jitter for the delay after failed attempt `n`
    /// (0-based).
    fn cap(&self, n: u32) -> Duration {
        let secs = self.base_delay.as_secs_f64() * self.multiplier.powi(n as i32);
        Duration::from_secs_f64(secs.min(self.max_delay.as_secs_f64()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("authentication rejected with status {0}")]
    Auth(u16),
    #[error("request failed with status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("retry budget exhausted after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("embedding dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinishReason {
    Stop,
    Length,
    ToolCalls,
    Other(String),
}

impl FinishReason {
    fn from_wire(raw: Option<String>) -> Self {
        match raw.as_deref() {
            None | Some("stop") => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            Some("tool_calls") => FinishReason::ToolCalls,
            Some(other) => FinishReason::Other(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ChatCompletion {
    pub content: String,
    pub finish_reason: FinishReason,
}

/// An embedding input. The instruction is prepended to the text before it is
/// sent, matching instruction-tuned embedding models.
#[derive(Debug, Clone)]
pub struct EmbedRequest {
    pub text: String,
    pub instruction: String,
}

impl EmbedRequest {
    fn input(&self) -> String {
        format!("{}{}", self.instruction, self.text)
    }
}

type SleepFn = Arc<dyn Fn(Duration) -> Pin<Box<dyn Future<Output = ()> + Send>> + Send + Sync>;

pub struct ClientBuilder {
    api_key: Option<String>,
    concurrency: usize,
    retry: RetryPolicy,
    request_timeout: Duration,
    sleeper: SleepFn,
}

impl Default for ClientBuilder {
    fn default() -> Self {
        Self {
            api_key: None,
            concurrency: 8,
            retry: RetryPolicy::default(),
            request_timeout: Duration::from_secs(600),
            sleeper: Arc::new(|d| Box::pin(tokio::time::sleep(d))),
        }
    }
}

impl ClientBuilder {
    pub fn api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    /// Reads the bearer token from [`API_KEY_ENV`] if set.
    pub fn api_key_from_env(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn concurrency(mut self, limit: usize) -> Self {
        self.concurrency = limit.max(1);
        self
    }

    pub fn retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn request_timeout(mut self, timeout: Duration) -> Self {
        self.request_timeout = timeout;
        self
    }

    /// Replaces the backoff sleep, letting tests observe delays without
    /// waiting them out.
    pub fn sleeper<F, Fut>(mut self, f: F) -> Self
    where
        F: Fn(Duration) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = ()> + Send + 'static,
    {
        self.sleeper = Arc::new(move |d| Box::pin(f(d)));
        self
    }

    pub fn build(self) -> ModelClient {
        let http = reqwest::Client::builder()
            .timeout(self.request_timeout)
            .build()
            .expect("reqwest client builds");
        ModelClient {
            inner: Arc::new(Inner {
                http,
                semaphore: Semaphore::new(self.concurrency),
                retry: self.retry,
                api_key: self.api_key,
                sleep: self.sleeper,
            }),
        }
    }
}

struct Inner {
    http: reqwest::Client,
    semaphore: Semaphore,
    retry: RetryPolicy,
    api_key: Option<String>,
    sleep: SleepFn,
}

#[derive(Clone)]
pub struct ModelClient {
    inner: Arc<Inner>,
}

#[derive(Serialize)]
struct ChatCompletionRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<&'a [String]>,
}

#[derive(Deserialize)]
struct ChatCompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Serialize)]
struct EmbeddingsRequest<'a> {
    model: &'a str,
    input: Vec<String>,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingRow>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f32>,
}

impl ModelClient {
    pub fn builder() -> ClientBuilder {
        ClientBuilder::default()
    }

    /// POST /v1/chat/completions. `base_url` is the server root.
    pub async fn chat(&self, base_url: &str, req: &ChatRequest) -> Result<ChatCompletion, ClientError> {
        let url = format!("{}/v1/chat/completions", base_url.trim_end_matches('/'));
        let body = serde_json::to_value(ChatCompletionRequest {
            model: &req.model,
            messages: &req.messages,
            temperature: req.temperature,
            max_tokens: req.max_tokens,
            stop: req.stop.as_deref(),
        })
        .expect("chat request serializes");

        let response: ChatCompletionResponse = self.post_json(&url, &body).await?;
        let choice = response
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ClientError::BadResponse("response has no choices".into()))?;
        let content = choice
            .message
            .content
            .ok_or_else(|| ClientError::BadResponse("choice has no message content".into()))?;
        Ok(ChatCompletion { content, finish_reason: FinishReason::from_wire(choice.finish_reason) })
    }

    /// POST /v1/embeddings for a single input.
    pub async fn embed(
        &self,
        base_url: &str,
        model: &str,
        req: &EmbedRequest,
        expected_dim: Option<usize>,
    ) -> Result<Vec<f32>, ClientError> {
        let mut rows = self.embed_batch(base_url, model, std::slice::from_ref(req), expected_dim).await?;
        Ok(rows.remove(0))
    }

    /// POST /v1/embeddings for a batch; rows come back in input order.
    pub async fn embed_batch(
        &self,
        base_url: &str,
        model: &str,
        reqs: &[EmbedRequest],
        expected_dim: Option<usize>,
    ) -> Result<Vec<Vec<f32>>, ClientError> {
        if reqs.is_empty() {
            return Ok(Vec::new());
        }
        let url = format!("{}/v1/embeddings", base_url.trim_end_matches('/'));
        let body = serde_json::to_value(EmbeddingsRequest {
            model,
            input: reqs.iter().map(EmbedRequest::input).collect(),
        })
        .expect("embeddings request serializes");

        let response: EmbeddingsResponse = self.post_json(&url, &body).await?;
        if response.data.len() != reqs.len() {
            return Err(ClientError::BadResponse(format!(
                "expected {} embedding rows, got {}",
                reqs.len(),
                response.data.len()
            )));
        }
        let mut rows: Vec<(usize, Vec<f32>)> = response
            .data
            .into_iter()
            .enumerate()
            .map(|(i, row)| (row.index.unwrap_or(i), row.embedding))
            .collect();
        rows.sort_by_key(|(i, _)| *i);

        let vectors: Vec<Vec<f32>> = rows.into_iter().map(|(_, v)| v).collect();
        if let Some(expected) = expected_dim {
            for v in &vectors {
                if v.len() != expected {
                    return Err(ClientError::DimensionMismatch { expected, got: v.len() });
                }
            }
        }
        Ok(vectors)
    }

    /// One permit-guarded request with retries. Holds the concurrency permit
    /// across backoff sleeps so retries cannot oversubscribe the server.
    async fn post_json<T: serde::de::DeserializeOwned>(
        &self,
        url: &str,
        body: &serde_json::Value,
    ) -> Result<T, ClientError> {
        let _permit = self.inner.semaphore.acquire().await.expect("semaphore open");
        let retry = &self.inner.retry;
        let mut last_error = String::new();

        for attempt in 0..retry.max_attempts {
            if attempt > 0 {
                let cap = retry.cap(attempt - 1);
                let jittered = cap.mul_f64(rand::rng().random_range(0.5..=1.0));
                (self.inner.sleep)(jittered).await;
            }

            let mut request = self.inner.http.post(url).json(body);
            if let Some(key) = &self.inner.api_key {
                request = request.bearer_auth(key);
            }

            match request.send().await {
                Err(err) => {
                    last_error = format!("transport error: {err}");
                }
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let bytes = match response.bytes().await {
                            Ok(b) => b,
                            Err(err) => {
                                last_error = format!("transport error reading body: {err}");
                                continue;
                            }
                        };
                        return serde_json::from_slice(&bytes).map_err(|e| {
                            ClientError::BadResponse(format!("invalid response JSON: {e}"))
                        });
                    }
                    let code = status.as_u16();
                    if code == 401 || code == 403 {
                        return Err(ClientError::Auth(code));
                    }
                    let retryable = code == 429 || status.is_server_error();
                    if !retryable {
                        let body = response.text().await.unwrap_or_default();
                        return Err(ClientError::Http { status: code, body });
                    }
                    last_error = format!("status {code}");
                }
            }
        }

        Err(ClientError::Exhausted { attempts: retry.max_attempts, last: last_error })
    }
}
