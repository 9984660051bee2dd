//! Ingestion of benchmark datasets from their standard on-disk layout into
//! the jsonl corpus format.
//!
//! All six supported benchmarks are distributed in a uniform layout by the
//! commonly mirrored evaluation suites:
//!
//! ```text
//! <root>/docsutf8/<id>.txt   # document text, UTF-8
//! <root>/keys/<id>.key       # gold keyphrases, one per line
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{CorpusError, Document};

/// The benchmark datasets the tooling knows how to label and sanity-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Inspec,
    Semeval2017,
    Semeval2010,
    Duc2001,
    Nus,
    Krapivin,
}

impl Dataset {
    pub const ALL: [Dataset; 6] = [
        Dataset::Inspec,
        Dataset::Semeval2017,
        Dataset::Semeval2010,
        Dataset::Duc2001,
        Dataset::Nus,
        Dataset::Krapivin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Inspec => "inspec",
            Dataset::Semeval2017 => "semeval2017",
            Dataset::Semeval2010 => "semeval2010",
            Dataset::Duc2001 => "duc2001",
            Dataset::Nus => "nus",
            Dataset::Krapivin => "krapivin",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| CorpusError::UnknownDataset { name: s.to_string() })
    }
}

/// Loads every document under `<root>/docsutf8/*.txt`, pairing each with its
/// `<root>/keys/<id>.key` gold file. Documents are returned sorted by id so
/// ingestion output is deterministic regardless of directory order.
pub fn load_raw_dir(root: &Path) -> Result<Vec<Document>, CorpusError> {
    let docs_dir = root.join("docsutf8");
    let keys_dir = root.join("keys");
    if !docs_dir.is_dir() {
        return Err(CorpusError::MalformedLayout {
            reason: format!("{} is not a directory", docs_dir.display()),
        });
    }
    if !keys_dir.is_dir() {
        return Err(CorpusError::MalformedLayout {
            reason: format!("{} is not a directory", keys_dir.display()),
        });
    }

    let mut ids = Vec::new();
    let entries = std::fs::read_dir(&docs_dir).map_err(|source| CorpusError::Io {
        path: docs_dir.clone(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: docs_dir.clone(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            return Err(CorpusError::MalformedLayout {
                reason: format!("{} has a non-UTF-8 file name", path.display()),
            });
        };
        ids.push(id.to_string());
    }
    ids.sort();

    let mut docs = Vec::with_capacity(ids.len());
    for id in ids {
        let doc_path = docs_dir.join(format!("{id}.txt"));
        let key_path = keys_dir.join(format!("{id}.key"));
        let document = std::fs::read_to_string(&doc_path).map_err(|source| CorpusError::Io {
            path: doc_path,
            source,
        })?;
        if !key_path.is_file() {
            return Err(CorpusError::MalformedLayout {
                reason: format!("missing gold file {}", key_path.display()),
            });
        }
        let keys_raw = std::fs::read_to_string(&key_path).map_err(|source| CorpusError::Io {
            path: key_path,
            source,
        })?;
        let keyphrases: Vec<String> = keys_raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        docs.push(Document {
            id,
            document: document.trim().to_string(),
            keyphrases,
        });
    }
    Ok(docs)
}
