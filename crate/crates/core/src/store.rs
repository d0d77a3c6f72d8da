//! Content-addressed persistence for every pipeline artifact.
//!
//! One directory per corpus:
//!
//! ```text
//! <root>/
//!   cache/page/        raw fetch bodies + sidecar metadata, keyed by URL hash
//!   cache/llm/         chat-completion responses, keyed by request hash
//!   cache/embedding/   embedding vectors, keyed by (model, text) hash
//!   records/           <source_id>.<stage>.json
//!   annotations/       <source_id>.json ground-truth files
//!   matrices/          exported link matrices (CSV + JSON)
//! ```
//!
//! Plain files are used instead of a database so fixtures diff cleanly.
//! Cache entries are immutable once written: re-putting the same key with the
//! same payload is a no-op, re-putting with a different payload is an error.
//! Writes go through a temp file plus atomic rename, so concurrent writers to
//! the same key cannot interleave partial content.

use crate::extraction::{MetadataRecord, RecordStage};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// What a cache entry holds; selects the subdirectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheKind {
    Page,
    Llm,
    Embedding,
}

impl CacheKind {
    fn dir_name(self) -> &'static str {
        match self {
            CacheKind::Page => "page",
            CacheKind::Llm => "llm",
            CacheKind::Embedding => "embedding",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache key '{key}' already holds a different payload")]
    ImmutabilityViolation { key: String },
    #[error("malformed cache key '{key}'")]
    BadKey { key: String },
    #[error("record file {path} failed to parse: {message}")]
    BadRecord { path: String, message: String },
    #[error("record {source_id} has schema '{found}' but schema '{requested}' was requested")]
    SchemaMismatch {
        source_id: String,
        found: String,
        requested: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A corpus directory. Cheap to clone paths from; all methods take `&self`
/// and are safe for concurrent use (same-key cache writes are serialized by
/// atomic rename).
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Outcome of a cache put.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Stored,
    /// An identical payload was already present.
    AlreadyPresent,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records_dir(&self) -> PathBuf {
        self.root.join("records")
    }

    pub fn annotations_dir(&self) -> PathBuf {
        self.root.join("annotations")
    }

    pub fn matrices_dir(&self) -> PathBuf {
        self.root.join("matrices")
    }

    fn cache_path(&self, key: &str, kind: CacheKind) -> Result<PathBuf, StoreError> {
        // Keys are hex digests, sometimes with a short dotted suffix
        // (e.g. "<hex>.meta"). Anything else risks path traversal.
        let ok = !key.is_empty()
            && key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_')
            && !key.starts_with('.');
        if !ok {
            return Err(StoreError::BadKey {
                key: key.to_string(),
            });
        }
        Ok(self.root.join("cache").join(kind.dir_name()).join(key))
    }

    /// Stores an immutable cache entry.
    pub fn put(
        &self,
        key: &str,
        payload: &[u8],
        kind: CacheKind,
    ) -> Result<PutOutcome, StoreError> {
        let path = self.cache_path(key, kind)?;
        if let Some(existing) = self.get(key, kind)? {
            if existing == payload {
                return Ok(PutOutcome::AlreadyPresent);
            }
            return Err(StoreError::ImmutabilityViolation {
                key: key.to_string(),
            });
        }
        write_atomic(&path, payload)?;
        Ok(PutOutcome::Stored)
    }

    pub fn get(&self, key: &str, kind: CacheKind) -> Result<Option<Vec<u8>>, StoreError> {
        let path = self.cache_path(key, kind)?;
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    /// Persists a record as `records/<source_id>.<stage>.json`.
    pub fn save_record(&self, record: &MetadataRecord) -> Result<PathBuf, StoreError> {
        let dir = self.records_dir();
        let path = dir.join(record_file_name(&record.source_id, record.stage));
        let mut json = serde_json::to_vec_pretty(record).expect("record serializes");
        json.push(b'\n');
        write_atomic(&path, &json)?;
        Ok(path)
    }

    /// Loads every record in a directory, optionally filtered by stage and
    /// schema. Corrupted files are reported individually and never abort the
    /// load of the remaining files.
    pub fn load_records_from(
        dir: &Path,
        schema_id: Option<&str>,
        stage: Option<RecordStage>,
    ) -> Result<(Vec<MetadataRecord>, Vec<StoreError>), StoreError> {
        let mut records = Vec::new();
        let mut errors = Vec::new();
        let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
            .collect();
        paths.sort();
        for path in paths {
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    errors.push(io_err(&path, e));
                    continue;
                }
            };
            let record: MetadataRecord = match serde_json::from_slice(&bytes) {
                Ok(r) => r,
                Err(e) => {
                    errors.push(StoreError::BadRecord {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            if let Some(wanted) = stage {
                if record.stage != wanted {
                    continue;
                }
            }
            if let Some(wanted) = schema_id {
                if record.schema_id != wanted {
                    tracing::warn!(
                        source_id = %record.source_id,
                        found = %record.schema_id,
                        requested = wanted,
                        "skipping record with non-matching schema"
                    );
                    continue;
                }
            }
            records.push(record);
        }
        Ok((records, errors))
    }

    pub fn load_records(
        &self,
        schema_id: Option<&str>,
        stage: Option<RecordStage>,
    ) -> Result<(Vec<MetadataRecord>, Vec<StoreError>), StoreError> {
        Self::load_records_from(&self.records_dir(), schema_id, stage)
    }

    /// Writes an exported artifact (matrix, score table) under the store root.
    pub fn write_output(&self, relative: &str, bytes: &[u8]) -> Result<PathBuf, StoreError> {
        let path = self.root.join(relative);
        write_atomic(&path, bytes)?;
        Ok(path)
    }
}

pub fn record_file_name(source_id: &str, stage: RecordStage) -> String {
    format!("{source_id}.{stage}.json")
}

fn write_atomic(path: &Path, payload: &[u8]) -> Result<(), StoreError> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static SEQ: AtomicU64 = AtomicU64::new(0);

    let dir = path
        .parent()
        .expect("cache paths always have a parent directory");
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        SEQ.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(payload).map_err(|e| io_err(&tmp, e))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}
