//! Spherical linear interpolation over flattened checkpoint tensors.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::container::{Tensor, TensorSet};
use crate::MergeError;

pub const DEFAULT_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
pub struct MergeSpec {
    /// Interpolation fraction in [0, 1]; 0 returns the first checkpoint.
    pub t: f64,
    /// Collinearity threshold: |cos| > 1 - eps falls back to linear blend.
    pub eps: f64,
}

impl MergeSpec {
    pub fn new(t: f64) -> Result<MergeSpec, MergeError> {
        let spec = MergeSpec { t, eps: DEFAULT_EPS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MergeError> {
        if !self.t.is_finite() || !(0.0..=1.0).contains(&self.t) {
            return Err(MergeError::InvalidSpec(format!("t must lie in [0, 1], got {}", self.t)));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 || self.eps >= 1.0 {
            return Err(MergeError::InvalidSpec(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        Ok(())
    }
}

/// How a tensor was combined, for the merge report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMethod {
    Slerp,
    LerpFallback,
    CopiedInteger,
    CopiedExcluded,
    CopiedEndpoint,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MergeReport {
    pub t: f64,
    pub tensor_count: usize,
    pub slerped: usize,
    pub lerp_fallback: usize,
    pub copied_integer: usize,
    pub copied_excluded: usize,
    pub copied_endpoint: usize,
}

/// Interpolates along the great circle between `a` and `b` at fraction `t`.
/// Falls back to a linear blend when the vectors are nearly collinear.
pub fn slerp_slice(a: &[f64], b: &[f64], t: f64, eps: f64) -> Result<(Vec<f64>, MergeMethod), MergeError> {
    if a.len() != b.len() {
        return Err(MergeError::ShapeMismatch { expected: a.len(), got: b.len() });
    }
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(MergeError::ZeroNorm);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cos = (dot / (norm_a * norm_b)).clamp(-1.0, 1.0);

    if cos.abs() > 1.0 - eps {
        let out = a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        return Ok((out, MergeMethod::LerpFallback));
    }

    let omega = cos.acos();
    let sin_omega = omega.sin();
    let coeff_a = ((1.0 - t) * omega).sin() / sin_omega;
    let coeff_b = (t * omega).sin() / sin_omega;
    let out = a.iter().zip(b).map(|(x, y)| coeff_a * x + coeff_b * y).collect();
    Ok((out, MergeMethod::Slerp))
}

/// Matches `name` against a pattern where `*` spans any run of characters.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    fn inner(p: &[u8], n: &[u8]) -> bool {
        match p.first() {
            None => n.is_empty(),
            Some(b'*') => {
                (0..=n.len()).any(|skip| inner(&p[1..], &n[skip..]))
            }
            Some(c) => n.first() == Some(c) && inner(&p[1..], &n[1..]),
        }
    }
    inner(pattern.as_bytes(), name.as_bytes())
}

fn merge_tensor(
    name: &str,
    a: &Tensor,
    b: &Tensor,
    spec: &MergeSpec,
    excluded: bool,
) -> Result<(Tensor, MergeMethod), MergeError> {
    if a.shape != b.shape {
        return Err(MergeError::TensorFailed {
            name: name.to_string(),
            reason: format!("shape {:?} vs {:?}", a.shape, b.shape),
        });
    }
    if a.dtype != b.dtype {
        return Err(MergeError::TensorFailed {
            name: name.to_string(),
            reason: format!("dtype {} vs {}", a.dtype.tag(), b.dtype.tag()),
        });
    }
    if excluded {
        return Ok((a.clone(), MergeMethod::CopiedExcluded));
    }
    if !a.dtype.is_float() {
        tracing::warn!(tensor = name, dtype = a.dtype.tag(), "integer tensor copied unmerged");
        return Ok((a.clone(), MergeMethod::CopiedInteger));
    }
    // Endpoints skip the float round trip so bytes carry over untouched.
    if spec.t == 0.0 {
        return Ok((a.clone(), MergeMethod::CopiedEndpoint));
    }
    if spec.t == 1.0 {
        return Ok((b.clone(), MergeMethod::CopiedEndpoint));
    }

    let wrap = |e: MergeError| match e {
        MergeError::TensorFailed { .. } => e,
        other => MergeError::TensorFailed { name: name.to_string(), reason: other.to_string() },
    };
    let va = a.to_f64_vec().map_err(wrap)?;
    let vb = b.to_f64_vec().map_err(wrap)?;
    let (merged, method) = slerp_slice(&va, &vb, spec.t, spec.eps).map_err(wrap)?;
    let tensor = a.with_f64_values(&merged).map_err(wrap)?;
    Ok((tensor, method))
}

/// Merges two checkpoints tensor-by-tensor. Both must hold the same tensor
/// names; `exclude` patterns are copied from `a` without interpolation.
pub fn merge_checkpoints(
    a: &TensorSet,
    b: &TensorSet,
    spec: &MergeSpec,
    exclude: &[String],
) -> Result<(TensorSet, MergeReport), MergeError> {
    spec.validate()?;

    let names_a: BTreeSet<&String> = a.tensors.keys().collect();
    let names_b: BTreeSet<&String> = b.tensors.keys().collect();
    if names_a != names_b {
        return Err(MergeError::NameSetMismatch {
            only_a: names_a.difference(&names_b).map(|s| s.to_string()).collect(),
            only_b: names_b.difference(&names_a).map(|s| s.to_string()).collect(),
        });
    }

    let entries: Vec<(&String, &Tensor)> = a.tensors.iter().collect();
    let merged: Vec<(String, Tensor, MergeMethod)> = entries
        .par_iter()
        .map(|(name, tensor_a)| {
            let tensor_b = &b.tensors[name.as_str()];
            let excluded = exclude.iter().any(|p| glob_match(p, name));
            merge_tensor(name, tensor_a, tensor_b, spec, excluded)
                .map(|(t, m)| ((*name).clone(), t, m))
        })
        .collect::<Result<_, _>>()?;

    let mut out = TensorSet { tensors: BTreeMap::new(), metadata: a.metadata.clone() };
    let mut report = MergeReport {
        t: spec.t,
        tensor_count: merged.len(),
        slerped: 0,
        lerp_fallback: 0,
        copied_integer: 0,
        copied_excluded: 0,
        copied_endpoint: 0,
    };
    for (name, tensor, method) in merged {
        match method {
            MergeMethod::Slerp => report.slerped += 1,
            MergeMethod::LerpFallback => report.lerp_fallback += 1,
            MergeMethod::CopiedInteger => report.copied_integer += 1,
            MergeMethod::CopiedExcluded => report.copied_excluded += 1,
            MergeMethod::CopiedEndpoint => report.copied_endpoint += 1,
        }
        out.tensors.insert(name, tensor);
    }
    Ok((out, report))
}
