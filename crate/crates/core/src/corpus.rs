//! Corpus manifests: the operator-facing file binding dataset sources to a
//! schema and optional LLM overrides.

use crate::ingest::DatasetSource;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

/// Optional LLM settings carried by a manifest. Flags beat environment
/// variables beat these values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LlmOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    pub schema_id: String,
    pub sources: Vec<DatasetSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmOverrides>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read manifest {path}: {message}")]
    Io { path: String, message: String },
    #[error("manifest parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest '{corpus_id}': duplicate source id '{id}'")]
    DuplicateSource { corpus_id: String, id: String },
    #[error("manifest '{corpus_id}': {message}")]
    Invalid { corpus_id: String, message: String },
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.sources.is_empty() {
            return Err(CorpusError::Invalid {
                corpus_id: self.corpus_id.clone(),
                message: "manifest lists no sources".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for source in &self.sources {
            if !seen.insert(source.id.as_str()) {
                return Err(CorpusError::DuplicateSource {
                    corpus_id: self.corpus_id.clone(),
                    id: source.id.clone(),
                });
            }
            source.validate().map_err(|e| CorpusError::Invalid {
                corpus_id: self.corpus_id.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// source id → provider name, the lookup evaluation reports need.
    pub fn providers(&self) -> BTreeMap<String, String> {
        self.sources
            .iter()
            .map(|s| (s.id.clone(), s.provider.clone()))
            .collect()
    }
}

pub fn parse_manifest(text: &str) -> Result<CorpusManifest, CorpusError> {
    let manifest: CorpusManifest = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_manifest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest_json(ids: &[&str]) -> String {
        let sources: Vec<String> = ids
            .iter()
            .map(|id| {
                format!(
                    r#"{{"id": "{id}", "landing_url": "https://example.com/{id}", "provider": "Example"}}"#
                )
            })
            .collect();
        format!(
            r#"{{"corpus_id": "test", "schema_id": "lter-life", "sources": [{}]}}"#,
            sources.join(",")
        )
    }

    #[test]
    fn parses_and_maps_providers() {
        let manifest = parse_manifest(&manifest_json(&["a", "b"])).unwrap();
        assert_eq!(manifest.sources.len(), 2);
        assert_eq!(manifest.providers()["a"], "Example");
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(matches!(
            parse_manifest(&manifest_json(&["a", "a"])),
            Err(CorpusError::DuplicateSource { .. })
        ));
    }

    #[test]
    fn empty_source_list_rejected() {
        assert!(matches!(
            parse_manifest(&manifest_json(&[])),
            Err(CorpusError::Invalid { .. })
        ));
    }
}
