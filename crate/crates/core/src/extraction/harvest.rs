//! The per-dataset harvest pipeline and the corpus-level driver.
//!
//! One dataset: ingest → build prompt → complete → parse → consolidate, with
//! both stages persisted through the store. A corpus: the same pipeline per
//! source on a bounded worker pool, where one failing dataset never aborts
//! the others.

use super::prompt::{build_extraction_prompt, PROMPT_VERSION};
use super::{
    parse_entity_response, post_process, ExtractionError, InferencePolicy, MetadataRecord,
    Provenance, RecordStage,
};
use crate::gateway::Gateway;
use crate::ingest::{ingest_source, DatasetSource, IngestConfig, PageRenderer};
use crate::schema::MetadataSchema;
use crate::store::Store;

#[derive(Debug, Clone)]
pub struct HarvestOptions {
    pub policy: InferencePolicy,
    /// Stop after the raw stage when `Raw`.
    pub stage: RecordStage,
    /// Bound on concurrent per-dataset harvests (parallel feature only).
    pub jobs: Option<usize>,
}

impl Default for HarvestOptions {
    fn default() -> Self {
        HarvestOptions {
            policy: InferencePolicy::Strict,
            stage: RecordStage::Postprocessed,
            jobs: Some(4),
        }
    }
}

/// Everything a harvest needs. Shared across worker threads.
pub struct HarvestContext<'a> {
    pub renderer: &'a dyn PageRenderer,
    pub gateway: &'a Gateway,
    pub store: &'a Store,
    pub ingest: IngestConfig,
    pub options: HarvestOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFailure {
    pub source_id: String,
    pub error: String,
}

/// Outcome of a corpus run. `successes` and `failures` are sorted by source
/// id so reports are deterministic regardless of worker scheduling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusRunReport {
    pub successes: Vec<String>,
    pub failures: Vec<SourceFailure>,
    pub truncated: Vec<String>,
}

impl CorpusRunReport {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Harvests one dataset end to end and persists each produced stage.
pub fn harvest(
    source: &DatasetSource,
    schema: &MetadataSchema,
    ctx: &HarvestContext<'_>,
) -> Result<MetadataRecord, ExtractionError> {
    let doc = ingest_source(source, ctx.renderer, Some(ctx.store), &ctx.ingest)?;

    let (req, truncated) = build_extraction_prompt(ctx.gateway, schema, &doc, ctx.options.policy);
    let response = ctx.gateway.complete(&req)?;
    let parsed = parse_entity_response(&response, schema).map_err(|e| match e {
        ExtractionError::EmptyExtraction { .. } => ExtractionError::EmptyExtraction {
            source_id: source.id.clone(),
        },
        other => other,
    })?;

    let raw = MetadataRecord {
        source_id: source.id.clone(),
        schema_id: schema.schema_id.clone(),
        stage: RecordStage::Raw,
        entities: parsed.entities,
        provenance: Provenance {
            model: req.model.clone(),
            prompt_hash: req.fingerprint("extract"),
            prompt_version: PROMPT_VERSION.into(),
            fetched_at: doc.fetched_at,
            inference_policy: ctx.options.policy,
            truncated,
            downgraded: false,
        },
    };
    ctx.store.save_record(&raw)?;
    if ctx.options.stage == RecordStage::Raw {
        return Ok(raw);
    }

    let post = post_process(ctx.gateway, &raw, schema, &doc)?;
    ctx.store.save_record(&post)?;
    Ok(post)
}

/// Harvests every source of a corpus. Per-dataset failures are isolated into
/// the report; the returned records cover the successes only.
pub fn harvest_corpus(
    sources: &[DatasetSource],
    schema: &MetadataSchema,
    ctx: &HarvestContext<'_>,
) -> (Vec<MetadataRecord>, CorpusRunReport) {
    let results = crate::par::with_jobs(ctx.options.jobs, || {
        crate::par::map_collect(sources, |source| {
            (source.id.clone(), harvest(source, schema, ctx))
        })
    });

    let mut records = Vec::new();
    let mut report = CorpusRunReport::default();
    for (source_id, result) in results {
        match result {
            Ok(record) => {
                if record.provenance.truncated {
                    report.truncated.push(source_id.clone());
                }
                report.successes.push(source_id);
                records.push(record);
            }
            Err(e) => {
                tracing::warn!(source_id = %source_id, error = %e, "dataset harvest failed");
                report.failures.push(SourceFailure {
                    source_id,
                    error: e.to_string(),
                });
            }
        }
    }
    records.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    report.successes.sort();
    report.truncated.sort();
    report
        .failures
        .sort_by(|a, b| a.source_id.cmp(&b.source_id));
    (records, report)
}
