//! Entity extraction: prompt construction, response parsing and the
//! consolidation pass that enforces one entity per field.
//!
//! Two LLM calls per dataset. The first asks for every entity of every schema
//! field found in the document, reported one per line in a tuple format. The
//! second consolidates the raw entities so each field ends up with exactly one
//! value: multi-valued fields become a single "a; b; c" enumeration and
//! fields absent from the source become the `N/A` sentinel. The consolidation
//! result is re-checked deterministically, so the one-entity-per-field
//! invariant holds no matter what the model returns.

mod harvest;
mod parse;
mod postprocess;
pub mod prompt;

pub use harvest::{
    harvest, harvest_corpus, CorpusRunReport, HarvestContext, HarvestOptions, SourceFailure,
};
pub use parse::{format_entities, parse_entity_response, ParsedEntities};
pub use postprocess::post_process;

use crate::gateway::GatewayError;
use crate::ingest::IngestError;
use crate::schema::MetadataSchema;
use crate::store::StoreError;
use crate::NOT_AVAILABLE;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Pipeline stage of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStage {
    Raw,
    Postprocessed,
}

impl fmt::Display for RecordStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordStage::Raw => write!(f, "raw"),
            RecordStage::Postprocessed => write!(f, "postprocessed"),
        }
    }
}

/// Whether the model may infer metadata that is not stated in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferencePolicy {
    #[default]
    Strict,
    BestGuess,
}

/// One extracted (field, value) pair. Raw records may hold several entries
/// for the same field; postprocessed records hold exactly one per schema
/// field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityEntry {
    pub field: String,
    pub value: String,
}

/// How a record came to be: enough to reproduce or audit the harvest.
/// `fetched_at` is the source document's fetch time (stable under a warm
/// cache), so re-running a harvest rewrites records byte-identically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub prompt_hash: String,
    pub prompt_version: String,
    pub fetched_at: DateTime<Utc>,
    pub inference_policy: InferencePolicy,
    /// Document was cut to fit the prompt budget.
    pub truncated: bool,
    /// Consolidation response was unusable; entries derive from the raw stage.
    pub downgraded: bool,
}

/// Extracted metadata for one dataset at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub source_id: String,
    pub schema_id: String,
    pub stage: RecordStage,
    pub entities: Vec<EntityEntry>,
    pub provenance: Provenance,
}

impl MetadataRecord {
    /// First value recorded for a field, if any.
    pub fn value(&self, field: &str) -> Option<&str> {
        self.entities
            .iter()
            .find(|e| e.field == field)
            .map(|e| e.value.as_str())
    }

    /// True when the field is present and not the `N/A` sentinel.
    pub fn has_value(&self, field: &str) -> bool {
        self.value(field)
            .map(|v| v != NOT_AVAILABLE)
            .unwrap_or(false)
    }

    /// Checks the postprocessed invariant: exactly one entry per schema
    /// field, in schema order, and no entries outside the schema.
    pub fn check_complete(&self, schema: &MetadataSchema) -> Result<(), ExtractionError> {
        if self.entities.len() != schema.fields.len() {
            return Err(ExtractionError::IncompleteRecord {
                source_id: self.source_id.clone(),
                message: format!(
                    "{} entries for {} schema fields",
                    self.entities.len(),
                    schema.fields.len()
                ),
            });
        }
        for (entry, field) in self.entities.iter().zip(&schema.fields) {
            if entry.field != field.name {
                return Err(ExtractionError::IncompleteRecord {
                    source_id: self.source_id.clone(),
                    message: format!(
                        "entry '{}' does not match schema field '{}'",
                        entry.field, field.name
                    ),
                });
            }
            if entry.value.is_empty() {
                return Err(ExtractionError::IncompleteRecord {
                    source_id: self.source_id.clone(),
                    message: format!("entry '{}' has an empty value", entry.field),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("no parseable entity lines in model response for '{source_id}'")]
    EmptyExtraction { source_id: String },
    #[error("record for '{source_id}' violates the one-entry-per-field invariant: {message}")]
    IncompleteRecord { source_id: String, message: String },
    #[error("expected a raw-stage record for '{source_id}', got {stage}")]
    WrongStage {
        source_id: String,
        stage: RecordStage,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Normalizes model-reported "not available" spellings to the sentinel.
pub(crate) fn normalize_value(raw: &str) -> String {
    let v = raw.trim();
    if v.is_empty()
        || v.eq_ignore_ascii_case("n/a")
        || v.eq_ignore_ascii_case("na")
        || v.eq_ignore_ascii_case("not available")
        || v.eq_ignore_ascii_case("none")
    {
        NOT_AVAILABLE.to_string()
    } else {
        v.to_string()
    }
}
