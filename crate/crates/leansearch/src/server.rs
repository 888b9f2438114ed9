//! HTTP retrieval service.
//!
//! POST /search  {"query": "...", "top_k": 5}
//!   200 {"tool": "leansearch", "top_k": 5, "theorems": [{name, formal_statement, informal_description, score}, ...]}
//!   400 {"error": "..."} on malformed requests
//!   500 {"error_id": "<uuid>"} on internal failures (details only in logs)
//! GET /healthz
//!   200 {"status": "ok", "docs": N}

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::embed::Embedder;
use crate::index::VectorIndex;

pub const DEFAULT_TOP_K: usize = 5;
pub const MAX_TOP_K: usize = 100;

pub struct ServerState {
    pub index: VectorIndex,
    pub embedder: Box<dyn Embedder>,
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/search", post(search_handler))
        .route("/healthz", get(healthz_handler))
        .with_state(state)
}

/// Binds the listener, then serves until the task is dropped. Returns the
/// bound address so callers can pass `:0` and discover the port.
pub async fn serve(
    state: Arc<ServerState>,
    addr: std::net::SocketAddr,
) -> std::io::Result<(std::net::SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!(error = %e, "search service stopped");
        }
    });
    Ok((bound, handle))
}

fn bad_request(message: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": message.into() }))).into_response()
}

async fn healthz_handler(State(state): State<Arc<ServerState>>) -> Response {
    Json(json!({ "status": "ok", "docs": state.index.len() })).into_response()
}

async fn search_handler(
    State(state): State<Arc<ServerState>>,
    body: Result<Json<Value>, axum::extract::rejection::JsonRejection>,
) -> Response {
    // Validation is manual so every rejection produces the same error shape.
    let Ok(Json(body)) = body else {
        return bad_request("request body must be a JSON object");
    };
    let Some(obj) = body.as_object() else {
        return bad_request("request body must be a JSON object");
    };
    let query = match obj.get("query") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => return bad_request("query must be non-empty"),
        Some(_) => return bad_request("query must be a string"),
        None => return bad_request("missing field: query"),
    };
    let top_k = match obj.get("top_k") {
        None | Some(Value::Null) => DEFAULT_TOP_K,
        Some(v) => match v.as_u64() {
            Some(k) if (1..=MAX_TOP_K as u64).contains(&k) => k as usize,
            _ => {
                return bad_request(format!("top_k must be an integer in 1..={MAX_TOP_K}"));
            }
        },
    };
    for key in obj.keys() {
        if key != "query" && key != "top_k" {
            return bad_request(format!("unknown field: {key}"));
        }
    }

    match state.index.search_text(state.embedder.as_ref(), &query, top_k).await {
        Ok(hits) => {
            let theorems: Vec<Value> = hits
                .iter()
                .map(|hit| {
                    let doc = state.index.doc(hit.index);
                    json!({
                        "name": doc.name,
                        "formal_statement": doc.formal_statement,
                        "informal_description": doc.informal_description,
                        "score": hit.score,
                    })
                })
                .collect();
            Json(json!({ "tool": "leansearch", "top_k": top_k, "theorems": theorems }))
                .into_response()
        }
        Err(e) => {
            let error_id = uuid::Uuid::new_v4().to_string();
            tracing::error!(error_id = %error_id, error = %e, query = %query, "search failed");
            (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error_id": error_id })))
                .into_response()
        }
    }
}
