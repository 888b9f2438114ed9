//! Client behavior against a local scripted HTTP server: retry
//! classification, backoff shape, auth, concurrency, and wire parsing.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};
use model_client::{ChatRequest, ClientError, EmbedRequest, FinishReason, ModelClient, RetryPolicy};
use serde_json::{json, Value};
use trace_model::ChatMessage;

#[derive(Default)]
struct MockState {
    hits: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    hold: Option<Duration>,
    auth_headers: Mutex<Vec<Option<String>>>,
    /// Status codes to emit before succeeding; empty means succeed.
    script: Mutex<VecDeque<u16>>,
    /// Body override for successful responses.
    body: Mutex<Option<Value>>,
}

impl MockState {
    fn push_failures(&self, codes: &[u16]) {
        self.script.lock().unwrap().extend(codes.iter().copied());
    }
}

async fn serve_mock(state: Arc<MockState>) -> SocketAddr {
    async fn chat(State(state): State<Arc<MockState>>, headers: HeaderMap) -> impl IntoResponse {
        respond(
            state,
            headers,
            json!({"choices": [{"message": {"content": "ok"}, "finish_reason": "stop"}]}),
        )
        .await
    }

    async fn embeddings(
        State(state): State<Arc<MockState>>,
        headers: HeaderMap,
    ) -> impl IntoResponse {
        respond(state, headers, json!({"data": [{"index": 0, "embedding": [1.0, 0.0]}]})).await
    }

    async fn respond(state: Arc<MockState>, headers: HeaderMap, default_body: Value) -> (StatusCode, Json<Value>) {
        state.hits.fetch_add(1, Ordering::SeqCst);
        let auth = headers
            .get("authorization")
            .map(|v| v.to_str().unwrap_or_default().to_string());
        state.auth_headers.lock().unwrap().push(auth);

        let current = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        state.max_in_flight.fetch_max(current, Ordering::SeqCst);
        if let Some(hold) = state.hold {
            tokio::time::sleep(hold).await;
        }
        state.in_flight.fetch_sub(1, Ordering::SeqCst);

        if let Some(code) = state.script.lock().unwrap().pop_front() {
            return (StatusCode::from_u16(code).unwrap(), Json(json!({"error": "scripted"})));
        }
        let body = state.body.lock().unwrap().clone().unwrap_or(default_body);
        (StatusCode::OK, Json(body))
    }

    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/embeddings", post(embeddings))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

fn recording_client(state_delays: Arc<Mutex<Vec<Duration>>>, retry: RetryPolicy) -> ModelClient {
    ModelClient::builder()
        .retry(retry)
        .sleeper(move |d| {
            let delays = state_delays.clone();
            async move {
                delays.lock().unwrap().push(d);
            }
        })
        .build()
}

fn chat_request() -> ChatRequest {
    ChatRequest {
        model: "prover".into(),
        messages: vec![ChatMessage::system("s"), ChatMessage::user("u")],
        temperature: 0.7,
        max_tokens: 64,
        stop: None,
    }
}

#[tokio::test]
async fn transient_failures_are_retried_until_success() {
    let state = Arc::new(MockState::default());
    state.push_failures(&[500, 429]);
    let addr = serve_mock(state.clone()).await;

    let delays = Arc::new(Mutex::new(Vec::new()));
    let client = recording_client(delays.clone(), RetryPolicy::default());
    let completion = client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap();

    assert_eq!(completion.content, "ok");
    assert_eq!(completion.finish_reason, FinishReason::Stop);
    assert_eq!(state.hits.load(Ordering::SeqCst), 3);
    assert_eq!(delays.lock().unwrap().len(), 2);
}

#[tokio::test]
async fn backoff_delays_are_jittered_and_non_decreasing() {
    let state = Arc::new(MockState::default());
    let addr = serve_mock(state.clone()).await;

    for _ in 0..10 {
        state.push_failures(&[500, 500, 500, 500]);
        let delays = Arc::new(Mutex::new(Vec::new()));
        let client = recording_client(delays.clone(), RetryPolicy::default());
        client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap();

        let delays = delays.lock().unwrap();
        assert_eq!(delays.len(), 4);
        let caps = [1.0, 2.0, 4.0, 8.0];
        for (delay, cap) in delays.iter().zip(caps) {
            let secs = delay.as_secs_f64();
            assert!(secs >= cap / 2.0 - 1e-9 && secs <= cap + 1e-9, "delay {secs} vs cap {cap}");
        }
        for pair in delays.windows(2) {
            assert!(pair[1] >= pair[0], "delays must not decrease: {pair:?}");
        }
    }
}

#[tokio::test]
async fn auth_rejection_is_not_retried() {
    let state = Arc::new(MockState::default());
    state.push_failures(&[401]);
    let addr = serve_mock(state.clone()).await;

    let client = recording_client(Arc::new(Mutex::new(Vec::new())), RetryPolicy::default());
    let err = client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap_err();

    assert!(matches!(err, ClientError::Auth(401)));
    assert_eq!(state.hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn non_retryable_client_errors_fail_fast() {
    let state = Arc::new(MockState::default());
    state.push_failures(&[404]);
    let addr = serve_mock(state.clone()).await;

    let client = recording_client(Arc::new(Mutex::new(Vec::new())), RetryPolicy::default());
    let err = client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap_err();

    assert!(matches!(err, ClientError::Http { status: 404, .. }));
    assert_eq!(state.hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn budget_exhaustion_reports_attempts_and_last_error() {
    let state = Arc::new(MockState::default());
    state.push_failures(&[503, 503, 503]);
    let addr = serve_mock(state.clone()).await;

    let retry = RetryPolicy { max_attempts: 3, ..RetryPolicy::default() };
    let client = recording_client(Arc::new(Mutex::new(Vec::new())), retry);
    let err = client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap_err();

    match err {
        ClientError::Exhausted { attempts, last } => {
            assert_eq!(attempts, 3);
            assert!(last.contains("503"));
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
    assert_eq!(state.hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn bearer_token_is_sent_when_configured() {
    let state = Arc::new(MockState::default());
    let addr = serve_mock(state.clone()).await;

    let client = ModelClient::builder().api_key(Some("sk-test".into())).build();
    client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap();

    let without_key = ModelClient::builder().build();
    without_key.chat(&format!("http://{addr}"), &chat_request()).await.unwrap();

    let headers = state.auth_headers.lock().unwrap();
    assert_eq!(headers[0].as_deref(), Some("Bearer sk-test"));
    assert_eq!(headers[1], None);
}

#[tokio::test]
async fn in_flight_requests_never_exceed_concurrency_limit() {
    let state = Arc::new(MockState { hold: Some(Duration::from_millis(25)), ..Default::default() });
    let addr = serve_mock(state.clone()).await;

    let client = ModelClient::builder().concurrency(4).build();
    let base = format!("http://{addr}");
    let mut handles = Vec::new();
    for _ in 0..16 {
        let client = client.clone();
        let base = base.clone();
        handles.push(tokio::spawn(async move {
            client.chat(&base, &chat_request()).await.unwrap()
        }));
    }
    for handle in handles {
        handle.await.unwrap();
    }

    let max = state.max_in_flight.load(Ordering::SeqCst);
    assert!(max <= 4, "observed {max} concurrent requests");
    assert!(max >= 2, "expected some parallelism, observed {max}");
    assert_eq!(state.hits.load(Ordering::SeqCst), 16);
}

#[tokio::test]
async fn embeddings_come_back_in_input_order_with_instruction_prepended() {
    let state = Arc::new(MockState::default());
    *state.body.lock().unwrap() = Some(json!({
        "data": [
            {"index": 1, "embedding": [0.0, 1.0, 0.0]},
            {"index": 0, "embedding": [1.0, 0.0, 0.0]}
        ]
    }));
    let addr = serve_mock(state.clone()).await;

    let client = ModelClient::builder().build();
    let reqs = vec![
        EmbedRequest { text: "first".into(), instruction: "Query: ".into() },
        EmbedRequest { text: "second".into(), instruction: "Query: ".into() },
    ];
    let rows = client
        .embed_batch(&format!("http://{addr}"), "embedder", &reqs, Some(3))
        .await
        .unwrap();

    assert_eq!(rows[0], vec![1.0, 0.0, 0.0]);
    assert_eq!(rows[1], vec![0.0, 1.0, 0.0]);
}

#[tokio::test]
async fn embedding_dimension_is_validated() {
    let state = Arc::new(MockState::default());
    let addr = serve_mock(state.clone()).await;

    let client = ModelClient::builder().build();
    let req = EmbedRequest { text: "q".into(), instruction: String::new() };
    let err = client
        .embed(&format!("http://{addr}"), "embedder", &req, Some(3))
        .await
        .unwrap_err();

    assert!(matches!(err, ClientError::DimensionMismatch { expected: 3, got: 2 }));
}

#[tokio::test]
async fn malformed_success_body_is_a_bad_response() {
    let state = Arc::new(MockState::default());
    *state.body.lock().unwrap() = Some(json!({"unexpected": true}));
    let addr = serve_mock(state.clone()).await;

    let client = ModelClient::builder().build();
    let err = client.chat(&format!("http://{addr}"), &chat_request()).await.unwrap_err();
    assert!(matches!(err, ClientError::BadResponse(_)));
    assert_eq!(state.hits.load(Ordering::SeqCst), 1, "parse failures are not retried");
}
