//! Prompt construction for the extraction and consolidation calls.
//!
//! Prompt layout is part of the artifact contract: identical inputs must
//! yield identical prompt text (prompts key the response cache), and the
//! section markers below double as routing anchors for the offline mock
//! models. `PROMPT_VERSION` is recorded in record provenance so harvests can
//! be attributed to a prompt wording.

use super::{InferencePolicy, MetadataRecord};
use crate::gateway::{ChatRequest, Gateway, Message};
use crate::ingest::SourceDocument;
use crate::schema::MetadataSchema;

pub const PROMPT_VERSION: &str = "mh-prompt-v1";

/// First line of the extraction request; the offline mock routes on it.
pub(crate) const EXTRACT_MARKER: &str =
    "Extract all metadata entities of the entity types listed below from the dataset document.";
pub(crate) const POSTPROCESS_MARKER: &str =
    "Consolidate the extracted metadata entities listed below into exactly one value per entity type.";

pub(crate) const SECTION_ENTITY_TYPES: &str = "## ENTITY TYPES";
pub(crate) const SECTION_OUTPUT_FORMAT: &str = "## OUTPUT FORMAT";
pub(crate) const SECTION_DOCUMENT: &str = "## DOCUMENT";
pub(crate) const SECTION_STRUCTURED: &str = "## STRUCTURED METADATA";
pub(crate) const SECTION_RAW_ENTITIES: &str = "## RAW ENTITIES";
pub(crate) const SECTION_RULES: &str = "## RULES";
pub(crate) const SECTION_EXCERPT: &str = "## DOCUMENT EXCERPT";

const SYSTEM_TEXT: &str = "You are a metadata harvesting assistant. You read dataset \
    descriptions and report metadata entities exactly in the requested format, with no \
    commentary.";

/// Characters of document text included in the consolidation prompt.
const EXCERPT_CHARS: usize = 2_000;

/// Hard cap on document characters inside the extraction prompt. Documents
/// are already capped at ingest; this guards direct callers.
pub const PROMPT_DOCUMENT_CHARS: usize = 400_000;

fn entity_type_lines(schema: &MetadataSchema) -> String {
    let mut out = String::new();
    for field in &schema.fields {
        out.push_str(&format!("- {}: {}\n", field.name, field.definition));
    }
    out
}

fn policy_line(policy: InferencePolicy) -> &'static str {
    match policy {
        InferencePolicy::Strict => {
            "Only report values that are stated in the document. If an entity type is not \
             present in the document, do not report a line for it."
        }
        InferencePolicy::BestGuess => {
            "Prefer values stated in the document. If an entity type is not stated literally \
             but the document clearly implies a value, you may report that best guess."
        }
    }
}

/// Builds the extraction request: task instruction, the (field, definition)
/// list, the tuple output format, the document text (page text first, then
/// the structured metadata block behind a labelled delimiter) and the
/// instruction to answer in English. Returns the request and whether the
/// document had to be truncated to fit the prompt budget.
pub fn build_extraction_prompt(
    gateway: &Gateway,
    schema: &MetadataSchema,
    doc: &SourceDocument,
    policy: InferencePolicy,
) -> (ChatRequest, bool) {
    let mut truncated = false;
    let mut clip = |text: &str| -> String {
        if text.chars().count() > PROMPT_DOCUMENT_CHARS {
            truncated = true;
            text.chars().take(PROMPT_DOCUMENT_CHARS).collect()
        } else {
            text.to_string()
        }
    };

    let mut user = String::new();
    user.push_str(EXTRACT_MARKER);
    user.push_str("\n\n");
    user.push_str(SECTION_ENTITY_TYPES);
    user.push('\n');
    user.push_str(&entity_type_lines(schema));
    user.push('\n');
    user.push_str(SECTION_OUTPUT_FORMAT);
    user.push('\n');
    user.push_str(
        "Report one entity per line, using exactly this tuple format:\n\
         (\"entity\" | <entity type> | <value>)\n\
         Report every entity you can find. If several candidate values exist for one entity \
         type, report each on its own line. Do not add commentary or extra lines.\n",
    );
    user.push_str(policy_line(policy));
    user.push('\n');
    user.push('\n');
    user.push_str(SECTION_DOCUMENT);
    user.push('\n');
    user.push_str(&clip(&doc.page_text));
    user.push('\n');
    if let Some(structured) = &doc.structured_text {
        user.push('\n');
        user.push_str(SECTION_STRUCTURED);
        user.push('\n');
        user.push_str(&clip(structured));
        user.push('\n');
    }
    user.push_str("\nAnswer in English.\n");

    let req = gateway.chat_request(vec![Message::system(SYSTEM_TEXT), Message::user(user)]);
    (req, truncated || doc.truncated)
}

/// Builds the consolidation request from a raw record: the schema
/// definitions, the raw entity lines, the one-value-per-field rules, and a
/// truncated excerpt of the source document for context.
pub fn build_postprocess_prompt(
    gateway: &Gateway,
    schema: &MetadataSchema,
    raw: &MetadataRecord,
    doc: &SourceDocument,
) -> ChatRequest {
    let mut user = String::new();
    user.push_str(POSTPROCESS_MARKER);
    user.push_str("\n\n");
    user.push_str(SECTION_ENTITY_TYPES);
    user.push('\n');
    user.push_str(&entity_type_lines(schema));
    user.push('\n');
    user.push_str(SECTION_RAW_ENTITIES);
    user.push('\n');
    user.push_str(&super::format_entities(&raw.entities));
    user.push('\n');
    user.push_str(SECTION_RULES);
    user.push('\n');
    user.push_str(
        "Report exactly one line per entity type listed above, in the same order, using the \
         tuple format (\"entity\" | <entity type> | <value>).\n\
         If several raw entities exist for one entity type, merge them into a single \
         enumeration joined by \"; \".\n\
         If no raw entity exists for an entity type, report the value N/A.\n\
         Answer in English.\n",
    );
    user.push('\n');
    user.push_str(SECTION_EXCERPT);
    user.push('\n');
    let excerpt: String = doc.page_text.chars().take(EXCERPT_CHARS).collect();
    user.push_str(&excerpt);
    user.push('\n');

    gateway.chat_request(vec![Message::system(SYSTEM_TEXT), Message::user(user)])
}
