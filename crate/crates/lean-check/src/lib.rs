//! Lean source checking: compile adapter plus lexical analysis.
//!
//! The compile side wraps an external checker (subprocess or HTTP) behind a
//! timeout, a concurrency cap, and a verdict cache keyed by source content
//! and backend identity. The lexical side answers two questions without
//! compiling: does a proof contain `sorry`/`admit` markers, and which known
//! theorem names does it use.

mod analysis;
mod compiler;
mod lexer;
mod verdict;

pub use analysis::{detect_incomplete, extract_identifiers, identifier_counts};
pub use compiler::{CompileBackend, CompileError, Compiler, CompilerConfig, CompilerStats};
pub use lexer::{identifier_tokens, mask_non_code};
pub use verdict::{CompileVerdict, Diagnostic, Severity};
