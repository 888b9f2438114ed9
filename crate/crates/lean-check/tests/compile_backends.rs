//! Compile adapter behavior over real subprocess and HTTP backends: verdict
//! mapping, timeouts, and the verdict cache.

use std::os::unix::fs::PermissionsExt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use lean_check::{CompileBackend, Compiler, CompilerConfig, Severity};
use serde_json::{json, Value};

/// Stand-in checker: fails with a diagnostic when the source mentions
/// FAIL_MARKER, stalls on SLEEP_MARKER, succeeds otherwise.
fn write_fake_checker(dir: &Path) -> String {
    let path = dir.join("fake-lean.sh");
    std::fs::write(
        &path,
        "#!/bin/sh\nif grep -q FAIL_MARKER \"$1\"; then\n  echo \"input.lean:2:1: error: FAIL_MARKER found\" >&2\n  exit 1\nfi\nif grep -q SLEEP_MARKER \"$1\"; then\n  sleep 5\nfi\necho checked\nexit 0\n",
    )
    .unwrap();
    let mut perms = std::fs::metadata(&path).unwrap().permissions();
    perms.set_mode(0o755);
    std::fs::set_permissions(&path, perms).unwrap();
    path.to_string_lossy().into_owned()
}

fn subprocess_compiler(script: &str, cache_dir: Option<&Path>, timeout: Duration) -> Compiler {
    Compiler::new(CompilerConfig {
        backend: CompileBackend::Subprocess {
            argv: vec![script.to_string(), "{file}".to_string()],
        },
        cache_dir: cache_dir.map(Path::to_path_buf),
        concurrency: 2,
        timeout,
    })
}

#[tokio::test]
async fn subprocess_success_and_failure_map_to_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_fake_checker(dir.path());
    let compiler = subprocess_compiler(&script, None, Duration::from_secs(10));

    let good = compiler.compile("theorem t : True := trivial").await.unwrap();
    assert!(good.success());
    assert!(!good.timed_out);
    assert!(good.errors().next().is_none());

    let bad = compiler.compile("theorem t : False := FAIL_MARKER").await.unwrap();
    assert!(!bad.success());
    let errors: Vec<_> = bad.errors().collect();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].severity, Severity::Error);
    assert_eq!(errors[0].line, Some(2));
    assert!(errors[0].message.contains("FAIL_MARKER"));
}

#[tokio::test]
async fn subprocess_timeout_is_a_verdict_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_fake_checker(dir.path());
    let compiler = subprocess_compiler(&script, None, Duration::from_millis(300));

    let verdict = compiler.compile("SLEEP_MARKER").await.unwrap();
    assert!(verdict.timed_out);
    assert!(!verdict.success());
    assert!(verdict.duration_secs >= 0.3);
    assert!(verdict.duration_secs < 4.0, "timeout must not wait out the child");
}

#[tokio::test]
async fn missing_binary_is_a_backend_error() {
    let compiler = Compiler::new(CompilerConfig {
        backend: CompileBackend::Subprocess {
            argv: vec!["/nonexistent/checker".into(), "{file}".into()],
        },
        cache_dir: None,
        concurrency: 1,
        timeout: Duration::from_secs(1),
    });
    let err = compiler.compile("x").await.unwrap_err();
    assert!(err.to_string().contains("unavailable") || err.to_string().contains("spawn"));
}

#[tokio::test]
async fn cache_serves_repeat_sources_without_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let script = write_fake_checker(dir.path());
    let compiler = subprocess_compiler(&script, Some(&cache), Duration::from_secs(10));

    let first = compiler.compile("theorem a : True := trivial").await.unwrap();
    let second = compiler.compile("theorem a : True := trivial").await.unwrap();
    assert_eq!(first, second);
    assert_eq!(compiler.stats().backend_calls, 1);
    assert_eq!(compiler.stats().cache_hits, 1);

    compiler.compile("theorem b : True := trivial").await.unwrap();
    assert_eq!(compiler.stats().backend_calls, 2);

    // A different backend identity must not see these entries.
    let other = Compiler::new(CompilerConfig {
        backend: CompileBackend::Subprocess {
            argv: vec![script.clone(), "--strict".into(), "{file}".into()],
        },
        cache_dir: Some(cache.clone()),
        concurrency: 1,
        timeout: Duration::from_secs(10),
    });
    other.compile("theorem a : True := trivial").await.unwrap();
    assert_eq!(other.stats().cache_hits, 0);
    assert_eq!(other.stats().backend_calls, 1);
}

#[tokio::test]
async fn timed_out_verdicts_are_not_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let script = write_fake_checker(dir.path());
    let compiler = subprocess_compiler(&script, Some(&cache), Duration::from_millis(200));

    let first = compiler.compile("SLEEP_MARKER").await.unwrap();
    assert!(first.timed_out);
    let second = compiler.compile("SLEEP_MARKER").await.unwrap();
    assert!(second.timed_out);
    assert_eq!(compiler.stats().backend_calls, 2);
    assert_eq!(compiler.stats().cache_hits, 0);
}

async fn serve_http_checker(hits: Arc<AtomicUsize>) -> String {
    async fn check(
        State(hits): State<Arc<AtomicUsize>>,
        Json(body): Json<Value>,
    ) -> Json<Value> {
        hits.fetch_add(1, Ordering::SeqCst);
        let source = body["source"].as_str().unwrap_or_default();
        if source.contains("FAIL_MARKER") {
            Json(json!({
                "success": false,
                "diagnostics": [
                    {"severity": "error", "message": "FAIL_MARKER found", "line": 1}
                ]
            }))
        } else {
            Json(json!({"success": true, "diagnostics": []}))
        }
    }

    let app = Router::new().route("/compile", post(check)).with_state(hits);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/compile")
}

#[tokio::test]
async fn http_backend_maps_wire_verdicts_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let endpoint = serve_http_checker(hits.clone()).await;

    let compiler = Compiler::new(CompilerConfig {
        backend: CompileBackend::Http { endpoint },
        cache_dir: Some(dir.path().join("cache")),
        concurrency: 4,
        timeout: Duration::from_secs(5),
    });

    let good = compiler.compile("theorem t : True := trivial").await.unwrap();
    assert!(good.success());
    let bad = compiler.compile("FAIL_MARKER").await.unwrap();
    assert!(!bad.success());
    assert_eq!(bad.errors().count(), 1);

    compiler.compile("theorem t : True := trivial").await.unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    assert_eq!(compiler.stats().cache_hits, 1);
}

#[tokio::test]
async fn http_backend_unreachable_is_a_backend_error() {
    let compiler = Compiler::new(CompilerConfig {
        backend: CompileBackend::Http { endpoint: "http://127.0.0.1:1/compile".into() },
        cache_dir: None,
        concurrency: 1,
        timeout: Duration::from_secs(1),
    });
    let err = compiler.compile("x").await.unwrap_err();
    assert!(err.to_string().contains("unavailable"));
}
