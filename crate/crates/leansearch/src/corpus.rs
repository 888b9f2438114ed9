//! Theorem corpus ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::SearchError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremDoc {
    pub name: String,
    pub formal_statement: String,
    #[serde(default)]
    pub informal_description: String,
}

impl TheoremDoc {
    /// Everything before the last dot of the name; empty for top-level names.
    pub fn namespace(&self) -> &str {
        self.name.rsplit_once('.').map(|(ns, _)| ns).unwrap_or("")
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub docs: Vec<TheoremDoc>,
    /// sha256 over the canonical JSONL serialization of the docs, hex.
    pub checksum: String,
}

pub fn corpus_checksum(docs: &[TheoremDoc]) -> String {
    let mut hasher = Sha256::new();
    for doc in docs {
        hasher.update(serde_json::to_string(doc).expect("doc serializes").as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a theorem corpus from JSONL, preserving file order. Names must be
/// unique and statements non-empty.
pub fn ingest_corpus(path: &Path) -> Result<Corpus, SearchError> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs: Vec<TheoremDoc> = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: TheoremDoc = serde_json::from_str(&line)
            .map_err(|e| SearchError::Schema { line: i + 1, reason: e.to_string() })?;
        if doc.name.is_empty() {
            return Err(SearchError::Schema { line: i + 1, reason: "empty theorem name".into() });
        }
        if doc.formal_statement.is_empty() {
            return Err(SearchError::Schema {
                line: i + 1,
                reason: format!("`{}` has an empty formal_statement", doc.name),
            });
        }
        if !seen.insert(doc.name.clone()) {
            return Err(SearchError::DuplicateName { line: i + 1, name: doc.name });
        }
        docs.push(doc);
    }

    let checksum = corpus_checksum(&docs);
    Ok(Corpus { docs, checksum })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, lines.join("\n")).unwrap();
        (dir, path)
    }

    #[test]
    fn ingest_preserves_order_and_checksums_content() {
        let (_dir, path) = write_lines(&[
            r#"{"name":"Nat.gcd_comm","formal_statement":"theorem Nat.gcd_comm (m n : ℕ) : Nat.gcd m n = Nat.gcd n m","informal_description":"gcd is commutative"}"#,
            r#"{"name":"List.map_id","formal_statement":"theorem List.map_id (l : List α) : l.map id = l"}"#,
        ]);
        let corpus = ingest_corpus(&path).unwrap();
        assert_eq!(corpus.docs.len(), 2);
        assert_eq!(corpus.docs[0].name, "Nat.gcd_comm");
        assert_eq!(corpus.docs[1].informal_description, "");
        assert_eq!(corpus.checksum.len(), 64);
        assert_eq!(corpus.checksum, corpus_checksum(&corpus.docs));
    }

    #[test]
    fn duplicate_names_are_rejected_with_line_number() {
        let (_dir, path) = write_lines(&[
            r#"{"name":"A.b","formal_statement":"x"}"#,
            r#"{"name":"A.b","formal_statement":"y"}"#,
        ]);
        match ingest_corpus(&path).unwrap_err() {
            SearchError::DuplicateName { line, name } => {
                assert_eq!(line, 2);
                assert_eq!(name, "A.b");
            }
            other => panic!("expected duplicate error, got {other}"),
        }
    }

    #[test]
    fn schema_violations_name_the_line() {
        let (_dir, path) = write_lines(&[
            r#"{"name":"A.b","formal_statement":"x"}"#,
            r#"{"name":"C.d","formal_statement":""}"#,
        ]);
        match ingest_corpus(&path).unwrap_err() {
            SearchError::Schema { line, .. } => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn namespace_is_the_dotted_prefix() {
        let doc = TheoremDoc {
            name: "Tactic.NormNum.nat_gcd_helper_1'".into(),
            formal_statement: "s".into(),
            informal_description: String::new(),
        };
        assert_eq!(doc.namespace(), "Tactic.NormNum");

        let top = TheoremDoc {
            name: "trivial".into(),
            formal_statement: "s".into(),
            informal_description: String::new(),
        };
        assert_eq!(top.namespace(), "");
    }
}
