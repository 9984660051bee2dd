//! Corpus handling: the document model, jsonl (de)serialization, benchmark
//! ingestion from the standard `docsutf8/` + `keys/` layout, token counting,
//! and per-dataset summary statistics.

mod ingest;
mod tokenizer;

pub use ingest::{load_raw_dir, Dataset};
pub use tokenizer::Tokenizer;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One corpus entry: a source document and its gold keyphrases.
///
/// The field names pin the jsonl schema: `{"id", "document", "keyphrases"}`,
/// one object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub document: String,
    pub keyphrases: Vec<String>,
}

/// Summary statistics for one dataset, computed over its loaded documents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub dataset: String,
    pub doc_count: usize,
    pub avg_doc_tokens: f64,
    pub total_keyphrases: usize,
    pub avg_keyphrases_per_doc: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid document record: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: document id is empty")]
    EmptyId { path: PathBuf, line: usize },
    #[error("{path}:{line}: duplicate document id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("unknown dataset {name:?} (expected one of: inspec, semeval2017, semeval2010, duc2001, nus, krapivin)")]
    UnknownDataset { name: String },
    #[error("malformed dataset directory: {reason}")]
    MalformedLayout { reason: String },
}

/// Loads a jsonl corpus, validating ids (non-empty, unique). Errors carry the
/// 1-based line number of the offending record.
pub fn load_jsonl(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut docs: Vec<Document> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                source,
            })?;
        if doc.id.is_empty() {
            return Err(CorpusError::EmptyId {
                path: path.to_path_buf(),
                line: line_no,
            });
        }
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id: doc.id,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes a corpus as jsonl, one compact JSON object per line.
pub fn write_jsonl(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("document serialization is infallible");
        writer.write_all(line.as_bytes()).map_err(io_err)?;
        writer.write_all(b"\n").map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

/// Computes summary statistics over a loaded corpus.
pub fn compute_stats(dataset: &str, docs: &[Document], tokenizer: &Tokenizer) -> DatasetStats {
    let doc_count = docs.len();
    let total_tokens: usize = docs.iter().map(|d| tokenizer.count(&d.document)).sum();
    let total_keyphrases: usize = docs.iter().map(|d| d.keyphrases.len()).sum();
    let denom = doc_count.max(1) as f64;
    DatasetStats {
        dataset: dataset.to_string(),
        doc_count,
        avg_doc_tokens: total_tokens as f64 / denom,
        total_keyphrases,
        avg_keyphrases_per_doc: total_keyphrases as f64 / denom,
    }
}

/// Streaming sha256 of a file, hex-encoded. Used to fingerprint corpus inputs
/// in run manifests.
pub fn file_sha256(path: &Path) -> Result<String, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(crate::text::hex_lower(&hasher.finalize()))
}
