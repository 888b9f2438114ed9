//! Compile verdicts and diagnostics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

/// Outcome of compiling one Lean source. Construction normalizes the verdict
/// so that `success` implies no error diagnostics and no timeout, whatever a
/// backend claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VerdictWire", into = "VerdictWire")]
pub struct CompileVerdict {
    success: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub duration_secs: f64,
    pub timed_out: bool,
}

#[derive(Serialize, Deserialize, Clone)]
struct VerdictWire {
    success: bool,
    diagnostics: Vec<Diagnostic>,
    duration_secs: f64,
    timed_out: bool,
}

impl From<VerdictWire> for CompileVerdict {
    fn from(w: VerdictWire) -> Self {
        CompileVerdict::new(w.success, w.diagnostics, w.duration_secs, w.timed_out)
    }
}

impl From<CompileVerdict> for VerdictWire {
    fn from(v: CompileVerdict) -> Self {
        VerdictWire {
            success: v.success,
            diagnostics: v.diagnostics,
            duration_secs: v.duration_secs,
            timed_out: v.timed_out,
        }
    }
}

impl CompileVerdict {
    pub fn new(
        success: bool,
        diagnostics: Vec<Diagnostic>,
        duration_secs: f64,
        timed_out: bool,
    ) -> Self {
        let has_error = diagnostics.iter().any(|d| d.severity == Severity::Error);
        Self { success: success && !timed_out && !has_error, diagnostics, duration_secs, timed_out }
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}
