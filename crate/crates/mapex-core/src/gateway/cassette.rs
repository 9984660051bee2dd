//! On-disk request/response store keyed by request fingerprint.
//!
//! The file is a single JSON object mapping fingerprints to recorded
//! responses. Entries are kept sorted by fingerprint so the bytes on disk
//! are deterministic regardless of the order calls completed in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{ChatResponse, GatewayError};

pub struct Cassette {
    path: PathBuf,
    entries: Mutex<BTreeMap<String, ChatResponse>>,
}

impl Cassette {
    /// Opens an existing cassette; the file must exist and parse. This is
    /// what replay mode uses — a missing cassette is an error, not an empty
    /// store.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let raw = std::fs::read_to_string(path).map_err(|e| GatewayError::CassetteFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let entries: BTreeMap<String, ChatResponse> =
            serde_json::from_str(&raw).map_err(|e| GatewayError::CassetteFile {
                path: path.to_path_buf(),
                reason: format!("invalid cassette JSON: {e}"),
            })?;
        Ok(Cassette {
            path: path.to_path_buf(),
            entries: Mutex::new(entries),
        })
    }

    /// Opens a cassette for recording, starting empty when the file does not
    /// exist yet.
    pub fn open_or_new(path: &Path) -> Result<Self, GatewayError> {
        if path.exists() {
            Self::open(path)
        } else {
            Ok(Cassette {
                path: path.to_path_buf(),
                entries: Mutex::new(BTreeMap::new()),
            })
        }
    }

    pub fn get(&self, fingerprint: &str) -> Option<ChatResponse> {
        self.entries
            .lock()
            .expect("cassette lock poisoned")
            .get(fingerprint)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cassette lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts an entry and writes the whole store back out atomically
    /// (temp file + rename), holding the lock across the write so concurrent
    /// recordings cannot clobber each other's entries.
    pub fn insert_and_persist(
        &self,
        fingerprint: String,
        response: ChatResponse,
    ) -> Result<(), GatewayError> {
        let mut entries = self.entries.lock().expect("cassette lock poisoned");
        entries.insert(fingerprint, response);
        let json = serde_json::to_string_pretty(&*entries)
            .expect("cassette serialization is infallible");
        let tmp = self.path.with_extension("json.tmp");
        let write_err = |e: std::io::Error| GatewayError::CassetteFile {
            path: self.path.clone(),
            reason: e.to_string(),
        };
        std::fs::write(&tmp, json).map_err(write_err)?;
        std::fs::rename(&tmp, &self.path).map_err(write_err)?;
        Ok(())
    }
}
