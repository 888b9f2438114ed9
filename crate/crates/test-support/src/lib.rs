//! Deterministic HTTP doubles for pipeline tests: a scripted chat-completion
//! server and a marker-driven Lean checker, both with request counters.
//!
//! Scripts are keyed by (model, problem). A request is attributed to the
//! problem whose key appears in any message (longest match wins) and consumes
//! the next scripted reply for that key; once a script runs out its last
//! reply repeats, so single-entry scripts answer every request identically
//! and restarted runs replay byte for byte.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Default)]
struct ModelScript {
    /// (model, problem key) -> ordered replies.
    replies: BTreeMap<(String, String), Vec<String>>,
    /// Sleep before answering any request for this problem key.
    delays: BTreeMap<String, Duration>,
    fallback: Option<String>,
}

#[derive(Default)]
struct ModelCounters {
    total: AtomicU64,
    unmatched: AtomicU64,
    per_key: Mutex<BTreeMap<(String, String), u64>>,
}

/// Builder for the scripted chat-completion server.
#[derive(Default)]
pub struct MockModel {
    script: ModelScript,
}

impl MockModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scripts the replies served to `model` for requests mentioning
    /// `problem`. Replies are consumed in order; the last one repeats.
    pub fn script(mut self, model: &str, problem: &str, replies: &[&str]) -> Self {
        self.script
            .replies
            .insert((model.to_string(), problem.to_string()), replies.iter().map(|r| r.to_string()).collect());
        self
    }

    /// Delays every reply for `problem`, regardless of model.
    pub fn delay(mut self, problem: &str, delay: Duration) -> Self {
        self.script.delays.insert(problem.to_string(), delay);
        self
    }

    /// Reply used when no (model, problem) script matches. Without one,
    /// unmatched requests answer 500.
    pub fn fallback(mut self, reply: &str) -> Self {
        self.script.fallback = Some(reply.to_string());
        self
    }

    pub async fn serve(self) -> MockModelHandle {
        let state = Arc::new(ModelState { script: self.script, counters: ModelCounters::default() });
        let router = Router::new()
            .route("/v1/chat/completions", post(chat_handler))
            .with_state(state.clone());
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0)))
            .await
            .expect("bind mock model");
        let addr = listener.local_addr().expect("local addr");
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, router).await;
        });
        MockModelHandle { base_url: format!("http://{addr}"), state, task }
    }
}

struct ModelState {
    script: ModelScript,
    counters: ModelCounters,
}

pub struct MockModelHandle {
    pub base_url: String,
    state: Arc<ModelState>,
    task: tokio::task::JoinHandle<()>,
}

impl MockModelHandle {
    /// Requests attributed to this (model, problem) pair so far.
    pub fn requests_for(&self, model: &str, problem: &str) -> u64 {
        self.state
            .counters
            .per_key
            .lock()
            .unwrap()
            .get(&(model.to_string(), problem.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn requests_total(&self) -> u64 {
        self.state.counters.total.load(Ordering::SeqCst)
    }

    pub fn requests_unmatched(&self) -> u64 {
        self.state.counters.unmatched.load(Ordering::SeqCst)
    }

    /// Per-key request counts, for whole-run assertions.
    pub fn request_counts(&self) -> BTreeMap<(String, String), u64> {
        self.state.counters.per_key.lock().unwrap().clone()
    }
}

impl Drop for MockModelHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// The problem key whose text appears in any request message; on overlap the
/// longest key wins so "p1" never shadows "p11".
fn match_problem<'a>(
    keys: impl Iterator<Item = &'a str>,
    messages: &[Value],
) -> Option<String> {
    let mut best: Option<&str> = None;
    for key in keys {
        let hit = messages.iter().any(|m| {
            m.get("content").and_then(Value::as_str).is_some_and(|c| c.contains(key))
        });
        if hit && best.is_none_or(|b| key.len() > b.len()) {
            best = Some(key);
        }
    }
    best.map(str::to_string)
}

async fn chat_handler(State(state): State<Arc<ModelState>>, Json(body): Json<Value>) -> Response {
    state.counters.total.fetch_add(1, Ordering::SeqCst);

    let model = body.get("model").and_then(Value::as_str).unwrap_or_default().to_string();
    let empty = Vec::new();
    let messages = body.get("messages").and_then(Value::as_array).unwrap_or(&empty);

    let problem_keys = state
        .script
        .replies
        .keys()
        .filter(|(m, _)| *m == model)
        .map(|(_, p)| p.as_str());
    let matched = match_problem(problem_keys, messages);

    let reply = match &matched {
        Some(problem) => {
            let key = (model.clone(), problem.clone());
            let serial = {
                let mut counts = state.counters.per_key.lock().unwrap();
                let entry = counts.entry(key.clone()).or_insert(0);
                let serial = *entry;
                *entry += 1;
                serial
            };
            if let Some(delay) = state.script.delays.get(problem) {
                tokio::time::sleep(*delay).await;
            }
            let replies = &state.script.replies[&key];
            Some(replies[(serial as usize).min(replies.len() - 1)].clone())
        }
        None => {
            state.counters.unmatched.fetch_add(1, Ordering::SeqCst);
            state.script.fallback.clone()
        }
    };

    match reply {
        Some(content) => Json(json!({
            "choices": [{
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop",
            }]
        }))
        .into_response(),
        None => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({"error": format!("no script for model {model:?} and request messages")})),
        )
            .into_response(),
    }
}

// ------------------------------------------------------------ mock checker

#[derive(Default)]
struct CheckerState {
    /// Sources containing any of these markers succeed.
    accept_markers: Vec<String>,
    /// Problem keys for per-problem call counting.
    problem_keys: Vec<String>,
    total: AtomicU64,
    per_problem: Mutex<BTreeMap<String, u64>>,
}

/// Builder for the marker-driven checker service. Speaks the HTTP checker
/// protocol: POST {"source"} answers {"success", "diagnostics"}.
#[derive(Default)]
pub struct MockChecker {
    accept_markers: Vec<String>,
    problem_keys: Vec<String>,
}

impl MockChecker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sources containing `marker` compile; everything else fails.
    pub fn accept(mut self, marker: &str) -> Self {
        self.accept_markers.push(marker.to_string());
        self
    }

    /// Registers a problem key for per-problem call counting.
    pub fn track(mut self, problem: &str) -> Self {
        self.problem_keys.push(problem.to_string());
        self
    }

    pub async fn serve(self) -> MockCheckerHandle {
        let state = Arc::new(CheckerState {
            accept_markers: self.accept_markers,
            problem_keys: self.problem_keys,
            ..CheckerState::default()
        });
        let router =
            Router::new().route("/compile", post(compile_handler)).with_state(state.clone());
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0)))
            .await
            .expect("bind mock checker");
        let addr = listener.local_addr().expect("local addr");
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, router).await;
        });
        MockCheckerHandle { endpoint: format!("http://{addr}/compile"), state, task }
    }
}

pub struct MockCheckerHandle {
    /// Full URL of the compile endpoint.
    pub endpoint: String,
    state: Arc<CheckerState>,
    task: tokio::task::JoinHandle<()>,
}

impl MockCheckerHandle {
    pub fn calls_total(&self) -> u64 {
        self.state.total.load(Ordering::SeqCst)
    }

    pub fn calls_for(&self, problem: &str) -> u64 {
        self.state.per_problem.lock().unwrap().get(problem).copied().unwrap_or(0)
    }
}

impl Drop for MockCheckerHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn compile_handler(State(state): State<Arc<CheckerState>>, Json(body): Json<Value>) -> Response {
    state.total.fetch_add(1, Ordering::SeqCst);
    let source = body.get("source").and_then(Value::as_str).unwrap_or_default();

    let mut best: Option<&str> = None;
    for key in &state.problem_keys {
        if source.contains(key.as_str()) && best.is_none_or(|b| key.len() > b.len()) {
            best = Some(key);
        }
    }
    if let Some(key) = best {
        *state.per_problem.lock().unwrap().entry(key.to_string()).or_insert(0) += 1;
    }

    let success = state.accept_markers.iter().any(|m| source.contains(m.as_str()));
    let diagnostics = if success {
        json!([])
    } else {
        json!([{"severity": "error", "message": "mock checker: proof rejected", "line": 1}])
    };
    Json(json!({"success": success, "diagnostics": diagnostics, "timed_out": false})).into_response()
}
