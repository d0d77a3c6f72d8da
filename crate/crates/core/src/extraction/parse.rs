//! Tolerant parsing of the tuple-formatted entity response.

use super::{EntityEntry, ExtractionError};
use crate::schema::MetadataSchema;

/// Result of parsing a model response line by line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedEntities {
    pub entities: Vec<EntityEntry>,
    /// Non-empty lines that did not match the tuple pattern.
    pub skipped_lines: usize,
    /// Well-formed lines naming a field outside the schema.
    pub unknown_fields: usize,
}

/// Parses `("entity" | <field> | <value>)` lines. Lines that do not match the
/// pattern are skipped with a warning; field names are matched to the schema
/// case-insensitively; unknown field names are dropped and counted. Values
/// may contain `|`: everything after the second delimiter belongs to the
/// value. Duplicate fields are retained — deduplication is the consolidation
/// pass's job.
pub fn parse_entity_response(
    text: &str,
    schema: &MetadataSchema,
) -> Result<ParsedEntities, ExtractionError> {
    let mut parsed = ParsedEntities::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_line(line) {
            Some((field, value)) => match schema.field_ci(&field) {
                Some(def) => parsed.entities.push(EntityEntry {
                    field: def.name.clone(),
                    value,
                }),
                None => {
                    tracing::warn!(field = %field, "dropping entity with unknown field name");
                    parsed.unknown_fields += 1;
                }
            },
            None => {
                tracing::warn!(line = %line, "skipping unparseable entity line");
                parsed.skipped_lines += 1;
            }
        }
    }
    if parsed.entities.is_empty() {
        return Err(ExtractionError::EmptyExtraction {
            source_id: String::new(),
        });
    }
    Ok(parsed)
}

fn parse_line(line: &str) -> Option<(String, String)> {
    let inner = line.strip_prefix('(')?.strip_suffix(')')?;
    let mut parts = inner.splitn(3, '|');
    let tag = parts.next()?.trim().trim_matches('"');
    if !tag.eq_ignore_ascii_case("entity") {
        return None;
    }
    let field = parts.next()?.trim();
    let value = parts.next()?.trim();
    if field.is_empty() || value.is_empty() {
        return None;
    }
    Some((field.to_string(), value.to_string()))
}

/// Formats entities back into the tuple line format, the inverse of
/// [`parse_entity_response`] for well-formed entity lists.
pub fn format_entities(entities: &[EntityEntry]) -> String {
    let mut out = String::new();
    for e in entities {
        out.push_str(&format!("(\"entity\" | {} | {})\n", e.field, e.value));
    }
    out
}
