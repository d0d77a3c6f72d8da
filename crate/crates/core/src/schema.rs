//! Metadata schemas: named, ordered sets of field definitions.
//!
//! A schema parameterizes both extraction (field names and definitions are
//! inserted into the prompt) and evaluation (the match mode decides whether a
//! field is scored with ROUGE-L or with LLM-judged metrics). Two schemas ship
//! embedded in the binary: `lter-life` (21 fields across 7 groups, definitions
//! derived from DCAT-AP and ISO 19115) and `croissant` (the 10 dataset-level
//! Required/Recommended fields). Schemas are immutable after load and safe to
//! share across concurrent harvests.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use thiserror::Error;

pub const LTER_LIFE_JSON: &str = include_str!("../schemas/lter-life.json");
pub const CROISSANT_JSON: &str = include_str!("../schemas/croissant.json");

/// Identifiers accepted by [`builtin_schema`].
pub const BUILTIN_SCHEMA_IDS: [&str; 2] = ["lter-life", "croissant"];

/// How a field is compared against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Deterministic string comparison (ROUGE-L F1).
    Exact,
    /// Free-form field judged with LLM metrics.
    Fuzzy,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchMode::Exact => write!(f, "exact"),
            MatchMode::Fuzzy => write!(f, "fuzzy"),
        }
    }
}

/// One metadata field: its canonical label, category, the prose definition
/// inserted into prompts, and how it is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDefinition {
    pub name: String,
    pub group: String,
    pub definition: String,
    pub match_mode: MatchMode,
    /// Provenance of the definition text, e.g. "DCAT-AP", "ISO 19115", "Croissant".
    pub standard_ref: String,
}

/// An ordered set of field definitions. Field order is stable across loads;
/// it determines prompt layout and therefore prompt determinism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataSchema {
    pub schema_id: String,
    pub fields: Vec<FieldDefinition>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("failed to read schema file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema '{schema_id}': duplicate field name '{field}'")]
    DuplicateField { schema_id: String, field: String },
    #[error("schema '{schema_id}': field '{field}' has an empty definition")]
    EmptyDefinition { schema_id: String, field: String },
    #[error("schema '{schema_id}': {message}")]
    Invalid { schema_id: String, message: String },
    #[error("unknown built-in schema '{0}' (expected one of: lter-life, croissant)")]
    UnknownBuiltin(String),
}

impl MetadataSchema {
    /// Looks up a field by its exact name.
    pub fn field(&self, name: &str) -> Option<&FieldDefinition> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Looks up a field case-insensitively, for matching LLM output back to
    /// the schema.
    pub fn field_ci(&self, name: &str) -> Option<&FieldDefinition> {
        let needle = name.trim();
        self.fields
            .iter()
            .find(|f| f.name.eq_ignore_ascii_case(needle))
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    /// Distinct group labels, in first-appearance order.
    pub fn groups(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in &self.fields {
            if seen.insert(f.group.as_str()) {
                out.push(f.group.as_str());
            }
        }
        out
    }

    /// Names of fields with [`MatchMode::Fuzzy`].
    pub fn fuzzy_fields(&self) -> Vec<&str> {
        self.fields
            .iter()
            .filter(|f| f.match_mode == MatchMode::Fuzzy)
            .map(|f| f.name.as_str())
            .collect()
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.schema_id.trim().is_empty() {
            return Err(SchemaError::Invalid {
                schema_id: self.schema_id.clone(),
                message: "schema_id must be non-empty".into(),
            });
        }
        if self.fields.is_empty() {
            return Err(SchemaError::Invalid {
                schema_id: self.schema_id.clone(),
                message: "schema must define at least one field".into(),
            });
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for f in &self.fields {
            // Case-insensitive uniqueness: response field names are matched
            // case-insensitively, so "Title" and "title" would be ambiguous.
            if !seen.insert(f.name.to_ascii_lowercase()) {
                return Err(SchemaError::DuplicateField {
                    schema_id: self.schema_id.clone(),
                    field: f.name.clone(),
                });
            }
            if f.definition.trim().is_empty() {
                return Err(SchemaError::EmptyDefinition {
                    schema_id: self.schema_id.clone(),
                    field: f.name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Canonical serialized form: pretty JSON plus a trailing newline.
    /// `parse_schema(canonical_json(s)) == s` for any valid schema.
    pub fn canonical_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("schema serializes");
        text.push('\n');
        text
    }
}

/// Parses and validates a schema from JSON text.
pub fn parse_schema(text: &str) -> Result<MetadataSchema, SchemaError> {
    let schema: MetadataSchema = serde_json::from_str(text).map_err(|e| SchemaError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    schema.validate()?;
    Ok(schema)
}

/// Loads and validates a schema file.
pub fn load_schema(path: &Path) -> Result<MetadataSchema, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|e| SchemaError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_schema(&text)
}

/// Returns one of the embedded schemas.
pub fn builtin_schema(id: &str) -> Result<MetadataSchema, SchemaError> {
    builtin_schema_json(id)
        .ok_or_else(|| SchemaError::UnknownBuiltin(id.to_string()))
        .and_then(parse_schema)
}

/// Raw JSON text of an embedded schema, as emitted by `schema export`.
pub fn builtin_schema_json(id: &str) -> Option<&'static str> {
    match id {
        "lter-life" => Some(LTER_LIFE_JSON),
        "croissant" => Some(CROISSANT_JSON),
        _ => None,
    }
}

/// Resolves a schema id: a built-in name, or a path to a schema file.
pub fn resolve_schema(id_or_path: &str) -> Result<MetadataSchema, SchemaError> {
    if BUILTIN_SCHEMA_IDS.contains(&id_or_path) {
        builtin_schema(id_or_path)
    } else {
        load_schema(Path::new(id_or_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lter_life_has_21_fields_in_7_groups() {
        let s = builtin_schema("lter-life").unwrap();
        assert_eq!(s.fields.len(), 21);
        assert_eq!(s.groups().len(), 7);
        assert_eq!(s.fuzzy_fields(), vec!["Description", "Keywords"]);
    }

    #[test]
    fn croissant_has_10_fields() {
        let s = builtin_schema("croissant").unwrap();
        assert_eq!(s.fields.len(), 10);
        assert!(s.field("Same as").is_some());
        let lter = builtin_schema("lter-life").unwrap();
        assert!(lter.field("Same as").is_none());
    }

    #[test]
    fn builtin_intersection_is_the_seven_shared_fields() {
        let lter: BTreeSet<_> = builtin_schema("lter-life")
            .unwrap()
            .fields
            .iter()
            .map(|f| f.name.clone())
            .collect();
        let croissant: BTreeSet<_> = builtin_schema("croissant")
            .unwrap()
            .fields
            .iter()
            .map(|f| f.name.clone())
            .collect();
        let shared: BTreeSet<_> = lter.intersection(&croissant).cloned().collect();
        let expected: BTreeSet<String> = [
            "Metadata language",
            "Title",
            "Description",
            "Keywords",
            "Data creator",
            "Data publisher",
            "License",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(shared, expected);
    }

    #[test]
    fn builtin_files_are_canonical() {
        for id in BUILTIN_SCHEMA_IDS {
            let text = builtin_schema_json(id).unwrap();
            let schema = parse_schema(text).unwrap();
            assert_eq!(schema.canonical_json(), text, "{id} file is not canonical");
        }
    }

    #[test]
    fn every_builtin_field_has_definition_and_standard_ref() {
        for id in BUILTIN_SCHEMA_IDS {
            let s = builtin_schema(id).unwrap();
            for f in &s.fields {
                assert!(!f.definition.trim().is_empty(), "{id}/{}", f.name);
                assert!(!f.standard_ref.trim().is_empty(), "{id}/{}", f.name);
            }
        }
    }

    #[test]
    fn duplicate_field_rejected() {
        let text = r#"{
            "schema_id": "dup",
            "fields": [
                {"name": "Title", "group": "g", "definition": "d", "match_mode": "exact", "standard_ref": "r"},
                {"name": "Title", "group": "g", "definition": "d", "match_mode": "exact", "standard_ref": "r"}
            ]
        }"#;
        match parse_schema(text) {
            Err(SchemaError::DuplicateField { field, .. }) => assert_eq!(field, "Title"),
            other => panic!("expected duplicate-field error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        match parse_schema("{ not json") {
            Err(SchemaError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(matches!(
            builtin_schema("unknown"),
            Err(SchemaError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn field_ci_matches_case_insensitively() {
        let s = builtin_schema("lter-life").unwrap();
        assert_eq!(s.field_ci("tITLe").unwrap().name, "Title");
        assert!(s.field_ci("no such field").is_none());
    }
}
