//! Thin HTTP client for the retrieval service. The search result is kept as
//! raw JSON because callers embed it verbatim as a tool response payload.

use serde_json::{json, Value};

use crate::SearchError;

#[derive(Debug, Clone)]
pub struct SearchClient {
    base_url: String,
    http: reqwest::Client,
}

impl SearchClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let base_url = base_url.into().trim_end_matches('/').to_string();
        Self { base_url, http: reqwest::Client::new() }
    }

    pub async fn search(&self, query: &str, top_k: usize) -> Result<Value, SearchError> {
        let url = format!("{}/search", self.base_url);
        let resp = self
            .http
            .post(&url)
            .json(&json!({ "query": query, "top_k": top_k }))
            .send()
            .await
            .map_err(|e| SearchError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().await.map_err(|e| SearchError::Unreachable(e.to_string()))?;
        if !status.is_success() {
            return Err(SearchError::Service { status: status.as_u16(), body });
        }
        serde_json::from_str(&body)
            .map_err(|e| SearchError::Service { status: status.as_u16(), body: e.to_string() })
    }

    pub async fn healthz(&self) -> Result<Value, SearchError> {
        let url = format!("{}/healthz", self.base_url);
        let resp = self
            .http
            .get(&url)
            .send()
            .await
            .map_err(|e| SearchError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().await.map_err(|e| SearchError::Unreachable(e.to_string()))?;
        if !status.is_success() {
            return Err(SearchError::Service { status: status.as_u16(), body });
        }
        serde_json::from_str(&body)
            .map_err(|e| SearchError::Service { status: status.as_u16(), body: e.to_string() })
    }
}
