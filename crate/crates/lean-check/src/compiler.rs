//! Compile adapter: runs Lean source through a checker backend with bounded
//! concurrency, a timeout, and a content-addressed verdict cache.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use tokio::io::AsyncWriteExt;
use tokio::sync::Semaphore;

use crate::verdict::{CompileVerdict, Diagnostic, Severity};

#[derive(Debug, Clone)]
pub enum CompileBackend {
    /// Invoke an external checker. Each argv element may contain the `{file}`
    /// placeholder, replaced by the path of a temp file holding the source.
    /// Exit status 0 means success; stdout/stderr are parsed for
    /// `error:`/`warning:` lines.
    Subprocess { argv: Vec<String> },
    /// POST `{"source": ...}` to a checker service that answers
    /// `{"success": bool, "diagnostics": [...]}`.
    Http { endpoint: String },
}

#[derive(Debug, Clone)]
pub struct CompilerConfig {
    pub backend: CompileBackend,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub timeout: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("checker backend unavailable: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CompilerStats {
    pub backend_calls: u64,
    pub cache_hits: u64,
}

pub struct Compiler {
    config: CompilerConfig,
    semaphore: Semaphore,
    http: reqwest::Client,
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl Compiler {
    pub fn new(config: CompilerConfig) -> Self {
        let semaphore = Semaphore::new(config.concurrency.max(1));
        // Backend timeout is enforced separately; give the HTTP layer slack
        // so the checker's own timeout answer wins when it is close.
        let http = reqwest::Client::builder()
            .timeout(config.timeout + Duration::from_secs(5))
            .build()
            .expect("reqwest client builds");
        Self {
            config,
            semaphore,
            http,
            backend_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    /// Identity string mixed into cache keys, so verdicts from different
    /// checkers never alias.
    pub fn backend_id(&self) -> String {
        match &self.config.backend {
            CompileBackend::Subprocess { argv } => format!("subprocess:{}", argv.join(" ")),
            CompileBackend::Http { endpoint } => format!("http:{endpoint}"),
        }
    }

    pub fn stats(&self) -> CompilerStats {
        CompilerStats {
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    fn cache_path(&self, source: &str) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let mut hasher = Sha256::new();
        hasher.update(self.backend_id().as_bytes());
        hasher.update([0]);
        hasher.update(source.as_bytes());
        let key = hex_string(&hasher.finalize());
        Some(dir.join(format!("{key}.json")))
    }

    /// Compiles one source. Timeouts are verdicts, not errors; only an
    /// unreachable or unspawnable backend is an error.
    pub async fn compile(&self, source: &str) -> Result<CompileVerdict, CompileError> {
        let cache_path = self.cache_path(source);
        if let Some(path) = &cache_path {
            if let Ok(raw) = tokio::fs::read(path).await {
                if let Ok(verdict) = serde_json::from_slice::<CompileVerdict>(&raw) {
                    self.cache_hits.fetch_add(1, Ordering::SeqCst);
                    return Ok(verdict);
                }
            }
        }

        let _permit = self.semaphore.acquire().await.expect("semaphore open");
        self.backend_calls.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let verdict = match &self.config.backend {
            CompileBackend::Subprocess { argv } => {
                self.run_subprocess(argv, source, started).await?
            }
            CompileBackend::Http { endpoint } => self.run_http(endpoint, source, started).await?,
        };

        // Timed-out verdicts are not cached; a rerun may finish in budget.
        if let Some(path) = &cache_path {
            if !verdict.timed_out {
                if let Some(parent) = path.parent() {
                    tokio::fs::create_dir_all(parent).await?;
                }
                let tmp = path.with_extension("json.tmp");
                let mut file = tokio::fs::File::create(&tmp).await?;
                file.write_all(&serde_json::to_vec(&verdict).expect("verdict serializes")).await?;
                file.flush().await?;
                tokio::fs::rename(&tmp, path).await?;
            }
        }
        Ok(verdict)
    }

    async fn run_subprocess(
        &self,
        argv: &[String],
        source: &str,
        started: Instant,
    ) -> Result<CompileVerdict, CompileError> {
        if argv.is_empty() {
            return Err(CompileError::Backend("empty subprocess command".into()));
        }
        let dir = tempfile::tempdir()?;
        let file = dir.path().join("input.lean");
        tokio::fs::write(&file, source).await?;
        let file_str = file.to_string_lossy();

        let args: Vec<String> =
            argv.iter().map(|a| a.replace("{file}", file_str.as_ref())).collect();
        let mut command = tokio::process::Command::new(&args[0]);
        command
            .args(&args[1..])
            .stdin(std::process::Stdio::null())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .kill_on_drop(true);

        let child = command
            .spawn()
            .map_err(|e| CompileError::Backend(format!("spawn {}: {e}", args[0])))?;

        match tokio::time::timeout(self.config.timeout, child.wait_with_output()).await {
            Err(_elapsed) => {
                // Dropping the timed-out future kills the child.
                Ok(CompileVerdict::new(false, Vec::new(), started.elapsed().as_secs_f64(), true))
            }
            Ok(output) => {
                let output = output?;
                let mut diagnostics = Vec::new();
                for line in String::from_utf8_lossy(&output.stderr)
                    .lines()
                    .chain(String::from_utf8_lossy(&output.stdout).lines())
                {
                    if let Some(diag) = parse_diagnostic_line(line) {
                        diagnostics.push(diag);
                    }
                }
                Ok(CompileVerdict::new(
                    output.status.success(),
                    diagnostics,
                    started.elapsed().as_secs_f64(),
                    false,
                ))
            }
        }
    }

    async fn run_http(
        &self,
        endpoint: &str,
        source: &str,
        started: Instant,
    ) -> Result<CompileVerdict, CompileError> {
        let result = self
            .http
            .post(endpoint)
            .json(&serde_json::json!({ "source": source }))
            .timeout(self.config.timeout)
            .send()
            .await;

        let response = match result {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Ok(CompileVerdict::new(
                    false,
                    Vec::new(),
                    started.elapsed().as_secs_f64(),
                    true,
                ))
            }
            Err(e) => return Err(CompileError::Backend(format!("POST {endpoint}: {e}"))),
        };

        if !response.status().is_success() {
            return Err(CompileError::Backend(format!(
                "POST {endpoint}: status {}",
                response.status()
            )));
        }

        #[derive(serde::Deserialize)]
        struct Wire {
            success: bool,
            #[serde(default)]
            diagnostics: Vec<Diagnostic>,
            #[serde(default)]
            timed_out: bool,
        }
        let wire: Wire = response
            .json()
            .await
            .map_err(|e| CompileError::Backend(format!("invalid checker response: {e}")))?;
        Ok(CompileVerdict::new(
            wire.success,
            wire.diagnostics,
            started.elapsed().as_secs_f64(),
            wire.timed_out,
        ))
    }
}

/// Parses checker output lines like
/// `input.lean:3:10: error: unknown identifier 'foo'`; the file prefix and
/// position are optional.
fn parse_diagnostic_line(line: &str) -> Option<Diagnostic> {
    let (severity, tag) = if let Some(pos) = line.find("error:") {
        (Severity::Error, pos)
    } else if let Some(pos) = line.find("warning:") {
        (Severity::Warning, pos)
    } else if let Some(pos) = line.find("info:") {
        (Severity::Info, pos)
    } else {
        return None;
    };

    let marker_len = match severity {
        Severity::Error => "error:".len(),
        Severity::Warning => "warning:".len(),
        Severity::Info => "info:".len(),
    };
    let message = line[tag + marker_len..].trim().to_string();

    // Positional prefix, when present: path:line:col:
    let prefix = &line[..tag];
    let line_no = prefix
        .trim_end()
        .trim_end_matches(':')
        .rsplit(':')
        .nth(1)
        .and_then(|s| s.parse::<u32>().ok());

    Some(Diagnostic { severity, message, line: line_no })
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
