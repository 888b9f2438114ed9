//! Named-tensor container: 8-byte little-endian header length, a JSON header
//! mapping tensor name -> {dtype, shape, data_offsets} plus "__metadata__",
//! then the concatenated raw little-endian tensor bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtype::{bf16_to_f32, f16_to_f32, f32_to_bf16, f32_to_f16, Dtype};
use crate::MergeError;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    /// Raw little-endian element bytes; len = element count * dtype size.
    pub data: Vec<u8>,
}

impl Tensor {
    pub fn new(dtype: Dtype, shape: Vec<usize>, data: Vec<u8>) -> Result<Tensor, MergeError> {
        let count: usize = shape.iter().product();
        let expected = count * dtype.size();
        if data.len() != expected {
            return Err(MergeError::CorruptHeader(format!(
                "shape {shape:?} needs {expected} bytes of {}, got {}",
                dtype.tag(),
                data.len()
            )));
        }
        Ok(Tensor { dtype, shape, data })
    }

    pub fn from_f32(shape: Vec<usize>, values: &[f32]) -> Result<Tensor, MergeError> {
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Tensor::new(Dtype::F32, shape, data)
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Widens storage to f64 for arithmetic. Errors on integer dtypes.
    pub fn to_f64_vec(&self) -> Result<Vec<f64>, MergeError> {
        let chunks = self.data.chunks_exact(self.dtype.size());
        let values = match self.dtype {
            Dtype::F64 => chunks.map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            Dtype::F32 => {
                chunks.map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
            }
            Dtype::F16 => chunks
                .map(|c| f16_to_f32(u16::from_le_bytes(c.try_into().unwrap())) as f64)
                .collect(),
            Dtype::BF16 => chunks
                .map(|c| bf16_to_f32(u16::from_le_bytes(c.try_into().unwrap())) as f64)
                .collect(),
            other => return Err(MergeError::UnsupportedDtype(format!("{} arithmetic", other.tag()))),
        };
        Ok(values)
    }

    /// Narrows f64 values back into this tensor's dtype and shape.
    pub fn with_f64_values(&self, values: &[f64]) -> Result<Tensor, MergeError> {
        if values.len() != self.element_count() {
            return Err(MergeError::ShapeMismatch {
                expected: self.element_count(),
                got: values.len(),
            });
        }
        let data: Vec<u8> = match self.dtype {
            Dtype::F64 => values.iter().flat_map(|v| v.to_le_bytes()).collect(),
            Dtype::F32 => values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect(),
            Dtype::F16 => {
                values.iter().flat_map(|v| f32_to_f16(*v as f32).to_le_bytes()).collect()
            }
            Dtype::BF16 => {
                values.iter().flat_map(|v| f32_to_bf16(*v as f32).to_le_bytes()).collect()
            }
            other => {
                return Err(MergeError::UnsupportedDtype(format!("{} arithmetic", other.tag())))
            }
        };
        Tensor::new(self.dtype, self.shape.clone(), data)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorSet {
    pub tensors: BTreeMap<String, Tensor>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct HeaderEntry {
    dtype: String,
    shape: Vec<usize>,
    data_offsets: [usize; 2],
}

const HEADER_PREFIX: usize = 8;

pub fn load_tensors(path: &Path) -> Result<TensorSet, MergeError> {
    let bytes = std::fs::read(path)?;
    load_tensor_bytes(&bytes)
}

pub fn load_tensor_bytes(bytes: &[u8]) -> Result<TensorSet, MergeError> {
    if bytes.len() < HEADER_PREFIX {
        return Err(MergeError::CorruptHeader("file shorter than header length field".into()));
    }
    let header_len = u64::from_le_bytes(bytes[..HEADER_PREFIX].try_into().unwrap()) as usize;
    let data_start = HEADER_PREFIX.checked_add(header_len).ok_or_else(|| {
        MergeError::CorruptHeader(format!("header length {header_len} overflows"))
    })?;
    if bytes.len() < data_start {
        return Err(MergeError::TruncatedData {
            name: "<header>".into(),
            needed: data_start,
            available: bytes.len(),
        });
    }
    let header: BTreeMap<String, serde_json::Value> =
        serde_json::from_slice(&bytes[HEADER_PREFIX..data_start])
            .map_err(|e| MergeError::CorruptHeader(e.to_string()))?;

    let blob = &bytes[data_start..];
    let mut set = TensorSet::default();
    let mut spans: Vec<(usize, usize, String)> = Vec::new();
    for (name, value) in header {
        if name == "__metadata__" {
            let meta: BTreeMap<String, String> = serde_json::from_value(value)
                .map_err(|e| MergeError::CorruptHeader(format!("__metadata__: {e}")))?;
            set.metadata = meta;
            continue;
        }
        let entry: HeaderEntry = serde_json::from_value(value)
            .map_err(|e| MergeError::CorruptHeader(format!("{name}: {e}")))?;
        let dtype = Dtype::parse(&entry.dtype)?;
        let [begin, end] = entry.data_offsets;
        if begin > end {
            return Err(MergeError::CorruptHeader(format!(
                "{name}: offsets [{begin}, {end}] are reversed"
            )));
        }
        if end > blob.len() {
            return Err(MergeError::TruncatedData {
                name: name.clone(),
                needed: end,
                available: blob.len(),
            });
        }
        let expected: usize = entry.shape.iter().product::<usize>() * dtype.size();
        if end - begin != expected {
            return Err(MergeError::CorruptHeader(format!(
                "{name}: span {} bytes, dtype/shape need {expected}",
                end - begin
            )));
        }
        spans.push((begin, end, name.clone()));
        set.tensors
            .insert(name, Tensor { dtype, shape: entry.shape, data: blob[begin..end].to_vec() });
    }

    // Spans must tile the data section exactly: no overlaps, gaps, or tail.
    spans.sort();
    let mut cursor = 0usize;
    for (begin, end, name) in &spans {
        if *begin != cursor {
            return Err(MergeError::CorruptHeader(format!(
                "{name}: data begins at {begin}, expected {cursor} (gap or overlap)"
            )));
        }
        cursor = *end;
    }
    if cursor != blob.len() {
        return Err(MergeError::CorruptHeader(format!(
            "data section holds {} bytes, header accounts for {cursor}",
            blob.len()
        )));
    }
    Ok(set)
}

pub fn save_tensors(set: &TensorSet, path: &Path) -> Result<(), MergeError> {
    let bytes = tensor_bytes(set)?;
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Canonical encoding: names in sorted order, offsets packed contiguously.
/// Identical sets always produce identical bytes.
pub fn tensor_bytes(set: &TensorSet) -> Result<Vec<u8>, MergeError> {
    let mut header: BTreeMap<&str, serde_json::Value> = BTreeMap::new();
    if !set.metadata.is_empty() {
        header.insert("__metadata__", serde_json::to_value(&set.metadata).unwrap());
    }
    let mut offset = 0usize;
    for (name, tensor) in &set.tensors {
        let end = offset + tensor.data.len();
        header.insert(
            name,
            serde_json::to_value(HeaderEntry {
                dtype: tensor.dtype.tag().to_string(),
                shape: tensor.shape.clone(),
                data_offsets: [offset, end],
            })
            .unwrap(),
        );
        offset = end;
    }
    let header_json = serde_json::to_vec(&header).unwrap();

    let mut out = Vec::with_capacity(HEADER_PREFIX + header_json.len() + offset);
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for tensor in set.tensors.values() {
        out.extend_from_slice(&tensor.data);
    }
    Ok(out)
}
