//! Exact-scan cosine index with on-disk persistence.
//!
//! Layout of an index directory:
//!   meta.json    dimension, doc count, corpus checksum, templates
//!   vectors.bin  row-major little-endian f32, one unit-norm row per doc
//!   docs.jsonl   the corpus docs, in index order
//!
//! meta.json is written last, so a directory with a readable meta is always
//! complete. A rebuild is skipped only when checksum, templates, and
//! dimension all match the requested configuration.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{corpus_checksum, Corpus, TheoremDoc};
use crate::embed::Embedder;
use crate::SearchError;

pub const META_FILE: &str = "meta.json";
pub const VECTORS_FILE: &str = "vectors.bin";
pub const DOCS_FILE: &str = "docs.jsonl";

pub const DEFAULT_DOC_TEMPLATE: &str = "{informal_description}: {formal_statement}";
pub const DEFAULT_QUERY_INSTRUCTION: &str =
    "Instruct: Given a math query, retrieve relevant Lean Mathlib theorems\nQuery: ";

#[derive(Debug, Clone)]
pub struct IndexConfig {
    /// Expected embedding dimension; inferred from the first batch when None.
    pub dimension: Option<usize>,
    pub batch_size: usize,
    /// Document rendering template; `{name}`, `{formal_statement}`, and
    /// `{informal_description}` are substituted.
    pub doc_template: String,
    /// Prefix prepended to queries before embedding.
    pub query_instruction: String,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            dimension: None,
            batch_size: 32,
            doc_template: DEFAULT_DOC_TEMPLATE.into(),
            query_instruction: DEFAULT_QUERY_INSTRUCTION.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct IndexMeta {
    format_version: u32,
    dimension: usize,
    count: usize,
    checksum: String,
    doc_template: String,
    query_instruction: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub index: usize,
    /// Cosine score rounded to 6 decimals; ordering and serialization both
    /// use the rounded value.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildStats {
    pub reused: bool,
    pub embedded_docs: usize,
}

pub struct VectorIndex {
    docs: Vec<TheoremDoc>,
    vectors: Vec<f32>,
    dimension: usize,
    checksum: String,
    doc_template: String,
    query_instruction: String,
}

fn render_doc(template: &str, doc: &TheoremDoc) -> String {
    template
        .replace("{name}", &doc.name)
        .replace("{formal_statement}", &doc.formal_statement)
        .replace("{informal_description}", &doc.informal_description)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn normalize(v: &mut [f32]) -> Result<(), ()> {
    let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(());
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / norm) as f32;
    }
    Ok(())
}

impl VectorIndex {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn doc(&self, index: usize) -> &TheoremDoc {
        &self.docs[index]
    }

    pub fn docs(&self) -> &[TheoremDoc] {
        &self.docs
    }

    pub fn query_instruction(&self) -> &str {
        &self.query_instruction
    }

    /// Exact scan: cosine against every row, accumulated in index order.
    /// Results sort by rounded score descending, ties broken by ascending
    /// theorem name.
    pub fn search(&self, query: &[f32], top_k: usize) -> Result<Vec<SearchHit>, SearchError> {
        if query.len() != self.dimension {
            return Err(SearchError::Dimension { expected: self.dimension, got: query.len() });
        }
        let mut q: Vec<f32> = query.to_vec();
        normalize(&mut q).map_err(|_| SearchError::ZeroNorm { what: "query".into() })?;

        let mut hits: Vec<SearchHit> = (0..self.docs.len())
            .map(|i| {
                let row = &self.vectors[i * self.dimension..(i + 1) * self.dimension];
                let dot: f64 =
                    row.iter().zip(&q).map(|(a, b)| (*a as f64) * (*b as f64)).sum();
                SearchHit { index: i, score: round6(dot) }
            })
            .collect();

        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("scores are finite")
                .then_with(|| self.docs[a.index].name.cmp(&self.docs[b.index].name))
        });
        hits.truncate(top_k);
        Ok(hits)
    }

    /// Embeds a query (instruction prepended) and searches.
    pub async fn search_text(
        &self,
        embedder: &dyn Embedder,
        query: &str,
        top_k: usize,
    ) -> Result<Vec<SearchHit>, SearchError> {
        if query.trim().is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let text = format!("{}{}", self.query_instruction, query);
        let mut rows = embedder
            .embed(std::slice::from_ref(&text))
            .await
            .map_err(|e| SearchError::Embed { doc: "query".into(), reason: e.to_string() })?;
        if rows.len() != 1 {
            return Err(SearchError::Embed {
                doc: "query".into(),
                reason: format!("expected 1 row, got {}", rows.len()),
            });
        }
        self.search(&rows.remove(0), top_k)
    }

    fn persist(&self, dir: &Path) -> Result<(), SearchError> {
        std::fs::create_dir_all(dir)?;

        let vectors_tmp = dir.join(format!("{VECTORS_FILE}.tmp"));
        {
            let mut out = BufWriter::new(std::fs::File::create(&vectors_tmp)?);
            for x in &self.vectors {
                out.write_all(&x.to_le_bytes())?;
            }
            out.flush()?;
        }
        std::fs::rename(&vectors_tmp, dir.join(VECTORS_FILE))?;

        let docs_tmp = dir.join(format!("{DOCS_FILE}.tmp"));
        {
            let mut out = BufWriter::new(std::fs::File::create(&docs_tmp)?);
            for doc in &self.docs {
                serde_json::to_writer(&mut out, doc)
                    .map_err(|e| SearchError::CorruptIndex(e.to_string()))?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        std::fs::rename(&docs_tmp, dir.join(DOCS_FILE))?;

        let meta = IndexMeta {
            format_version: 1,
            dimension: self.dimension,
            count: self.docs.len(),
            checksum: self.checksum.clone(),
            doc_template: self.doc_template.clone(),
            query_instruction: self.query_instruction.clone(),
        };
        let meta_tmp = dir.join(format!("{META_FILE}.tmp"));
        std::fs::write(
            &meta_tmp,
            serde_json::to_vec_pretty(&meta).map_err(|e| SearchError::CorruptIndex(e.to_string()))?,
        )?;
        std::fs::rename(&meta_tmp, dir.join(META_FILE))?;
        Ok(())
    }
}

/// Loads a persisted index, verifying sizes and the corpus checksum.
pub fn load_index(dir: &Path) -> Result<VectorIndex, SearchError> {
    let meta_raw = std::fs::read(dir.join(META_FILE))?;
    let meta: IndexMeta = serde_json::from_slice(&meta_raw)
        .map_err(|e| SearchError::CorruptIndex(format!("meta.json: {e}")))?;
    if meta.format_version != 1 {
        return Err(SearchError::CorruptIndex(format!(
            "unsupported format_version {}",
            meta.format_version
        )));
    }

    let mut docs = Vec::with_capacity(meta.count);
    for (i, line) in std::fs::read_to_string(dir.join(DOCS_FILE))?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: TheoremDoc = serde_json::from_str(line)
            .map_err(|e| SearchError::Schema { line: i + 1, reason: e.to_string() })?;
        docs.push(doc);
    }
    if docs.len() != meta.count {
        return Err(SearchError::CorruptIndex(format!(
            "docs.jsonl has {} docs, meta says {}",
            docs.len(),
            meta.count
        )));
    }
    if corpus_checksum(&docs) != meta.checksum {
        return Err(SearchError::CorruptIndex("docs.jsonl does not match checksum".into()));
    }

    let bytes = std::fs::read(dir.join(VECTORS_FILE))?;
    let expected_len = meta.count * meta.dimension * 4;
    if bytes.len() != expected_len {
        return Err(SearchError::CorruptIndex(format!(
            "vectors.bin is {} bytes, expected {expected_len}",
            bytes.len()
        )));
    }
    let vectors: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    Ok(VectorIndex {
        docs,
        vectors,
        dimension: meta.dimension,
        checksum: meta.checksum,
        doc_template: meta.doc_template,
        query_instruction: meta.query_instruction,
    })
}

/// Builds (or reuses) an index over the corpus. An existing directory is
/// reused only when its checksum, templates, and dimension match; otherwise
/// the docs are re-embedded and the directory rewritten. Nothing is persisted
/// until every document embedded successfully.
pub async fn build_index(
    corpus: &Corpus,
    embedder: &dyn Embedder,
    config: &IndexConfig,
    dir: &Path,
) -> Result<(VectorIndex, BuildStats), SearchError> {
    if dir.join(META_FILE).exists() {
        if let Ok(existing) = load_index(dir) {
            let dim_ok = config.dimension.is_none_or(|d| d == existing.dimension);
            if existing.checksum == corpus.checksum
                && existing.doc_template == config.doc_template
                && existing.query_instruction == config.query_instruction
                && dim_ok
            {
                return Ok((existing, BuildStats { reused: true, embedded_docs: 0 }));
            }
        }
    }

    let mut dimension = config.dimension.or(embedder.dimension());
    let mut vectors: Vec<f32> = Vec::new();

    for batch in corpus.docs.chunks(config.batch_size.max(1)) {
        let texts: Vec<String> =
            batch.iter().map(|doc| render_doc(&config.doc_template, doc)).collect();
        let rows = embedder.embed(&texts).await.map_err(|e| SearchError::Embed {
            doc: batch[0].name.clone(),
            reason: e.to_string(),
        })?;
        if rows.len() != batch.len() {
            return Err(SearchError::Embed {
                doc: batch[0].name.clone(),
                reason: format!("expected {} rows, got {}", batch.len(), rows.len()),
            });
        }
        for (doc, mut row) in batch.iter().zip(rows) {
            let dim = *dimension.get_or_insert(row.len());
            if row.len() != dim {
                return Err(SearchError::Dimension { expected: dim, got: row.len() });
            }
            normalize(&mut row)
                .map_err(|_| SearchError::ZeroNorm { what: doc.name.clone() })?;
            vectors.extend_from_slice(&row);
        }
    }

    let dimension = dimension.unwrap_or(0);
    if corpus.docs.is_empty() {
        return Err(SearchError::CorruptIndex("refusing to build an empty index".into()));
    }

    let index = VectorIndex {
        docs: corpus.docs.clone(),
        vectors,
        dimension,
        checksum: corpus.checksum.clone(),
        doc_template: config.doc_template.clone(),
        query_instruction: config.query_instruction.clone(),
    };
    index.persist(dir)?;
    Ok((index, BuildStats { reused: false, embedded_docs: corpus.docs.len() }))
}
