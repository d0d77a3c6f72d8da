//! The consolidation pass: one LLM call plus a deterministic re-check that
//! guarantees exactly one value per schema field.

use super::prompt::build_postprocess_prompt;
use super::{
    normalize_value, parse_entity_response, EntityEntry, ExtractionError, MetadataRecord,
    RecordStage,
};
use crate::gateway::Gateway;
use crate::ingest::SourceDocument;
use crate::schema::MetadataSchema;
use crate::NOT_AVAILABLE;

/// Runs the consolidation call on a raw record.
///
/// The model response is parsed tolerantly and then consolidated
/// deterministically: for every schema field, in schema order, the record
/// gets exactly one entry — the single reported value, a "; "-joined
/// enumeration when the model still reported several, or `N/A` when it
/// reported none. If the response contains no parseable entity line at all
/// the record falls back to a consolidation of the raw entities and is
/// flagged `downgraded` in its provenance.
pub fn post_process(
    gateway: &Gateway,
    raw: &MetadataRecord,
    schema: &MetadataSchema,
    doc: &SourceDocument,
) -> Result<MetadataRecord, ExtractionError> {
    if raw.stage != RecordStage::Raw {
        return Err(ExtractionError::WrongStage {
            source_id: raw.source_id.clone(),
            stage: raw.stage,
        });
    }
    let req = build_postprocess_prompt(gateway, schema, raw, doc);
    let response = gateway.complete(&req)?;

    let (entities, downgraded) = match parse_entity_response(&response, schema) {
        Ok(parsed) => (consolidate(&parsed.entities, schema), false),
        Err(ExtractionError::EmptyExtraction { .. }) => {
            tracing::warn!(
                source_id = %raw.source_id,
                "consolidation response unusable; deriving entries from the raw stage"
            );
            (consolidate(&raw.entities, schema), true)
        }
        Err(e) => return Err(e),
    };

    let mut provenance = raw.provenance.clone();
    provenance.prompt_hash = req.fingerprint("postprocess");
    provenance.downgraded = downgraded;
    let record = MetadataRecord {
        source_id: raw.source_id.clone(),
        schema_id: raw.schema_id.clone(),
        stage: RecordStage::Postprocessed,
        entities,
        provenance,
    };
    record.check_complete(schema)?;
    Ok(record)
}

/// Deterministic one-value-per-field consolidation over arbitrary entity
/// multisets: distinct values for one field are joined with "; " in first
/// appearance order, absent fields become `N/A`.
pub(crate) fn consolidate(entities: &[EntityEntry], schema: &MetadataSchema) -> Vec<EntityEntry> {
    schema
        .fields
        .iter()
        .map(|field| {
            let mut values: Vec<String> = Vec::new();
            for e in entities.iter().filter(|e| e.field == field.name) {
                let v = normalize_value(&e.value);
                if v != NOT_AVAILABLE && !values.contains(&v) {
                    values.push(v);
                }
            }
            let value = if values.is_empty() {
                NOT_AVAILABLE.to_string()
            } else {
                values.join("; ")
            };
            EntityEntry {
                field: field.name.clone(),
                value,
            }
        })
        .collect()
}
