//! Checkpoint merging: a named-tensor file container, spherical linear
//! interpolation between two checkpoints, and an interpolation sweep that
//! scores each blend through an external evaluation hook.

pub mod container;
pub mod dtype;
pub mod slerp;
pub mod sweep;

pub use container::{load_tensors, save_tensors, tensor_bytes, Tensor, TensorSet};
pub use dtype::Dtype;
pub use slerp::{
    glob_match, merge_checkpoints, slerp_slice, MergeMethod, MergeReport, MergeSpec, DEFAULT_EPS,
};
pub use sweep::{render_table, run_sweep, SweepConfig, SweepOutcome, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt tensor header: {0}")]
    CorruptHeader(String),
    #[error("tensor {name} needs {needed} bytes, file holds {available}")]
    TruncatedData { name: String, needed: usize, available: usize },
    #[error("unsupported dtype: {0}")]
    UnsupportedDtype(String),
    #[error("length mismatch: expected {expected} elements, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("cannot interpolate a zero-norm tensor")]
    ZeroNorm,
    #[error("checkpoints hold different tensors (only in first: {only_a:?}, only in second: {only_b:?})")]
    NameSetMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("invalid merge spec: {0}")]
    InvalidSpec(String),
    #[error("tensor {name}: {reason}")]
    TensorFailed { name: String, reason: String },
}
