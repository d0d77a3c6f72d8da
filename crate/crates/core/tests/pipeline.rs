//! End-to-end pipeline behaviour over the offline mock models: harvesting a
//! local-file corpus, failure isolation, scoring, linking and the
//! one-entry-per-field consolidation invariant under fuzzed raw inputs.

mod common;

use chrono::NaiveDate;
use common::{build_fixture_corpus, fixture_schema, FIXTURE_OUTCOME_COUNTS};
use metaharvest_core::evaluation::{evaluate_corpus, retrieval_summary, LlmJudge, Metric};
use metaharvest_core::extraction::{
    harvest, harvest_corpus, post_process, EntityEntry, HarvestContext, HarvestOptions,
    InferencePolicy, MetadataRecord, Provenance, RecordStage,
};
use metaharvest_core::gateway::Gateway;
use metaharvest_core::ingest::{
    ingest_source, DatasetSource, FetchConfig, IngestConfig, SourceDocument, StaticFetcher,
};
use metaharvest_core::linking::{
    normalize_temporal_coverage, overlap_matrix, similarity_matrix, NormalizeError,
};
use metaharvest_core::mock::mock_gateway;
use metaharvest_core::store::Store;
use metaharvest_core::NOT_AVAILABLE;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

struct Pipeline {
    _dir: tempfile::TempDir,
    store: Arc<Store>,
    gateway: Gateway,
    fetcher: StaticFetcher,
    corpus: common::FixtureCorpus,
}

fn pipeline() -> Pipeline {
    let dir = tempfile::tempdir().unwrap();
    let corpus = build_fixture_corpus(dir.path());
    let store = Arc::new(Store::open(dir.path().join("out")).unwrap());
    let gateway = mock_gateway(Some(store.clone()));
    let fetcher = StaticFetcher::new(&FetchConfig::default());
    Pipeline {
        _dir: dir,
        store,
        gateway,
        fetcher,
        corpus,
    }
}

impl Pipeline {
    fn ctx(&self) -> HarvestContext<'_> {
        HarvestContext {
            renderer: &self.fetcher,
            gateway: &self.gateway,
            store: &self.store,
            ingest: IngestConfig::default(),
            options: HarvestOptions::default(),
        }
    }
}

#[test]
fn mock_harvest_reproduces_labelled_page_fields() {
    let p = pipeline();
    let (records, report) = harvest_corpus(&p.corpus.manifest.sources, &p.corpus.schema, &p.ctx());
    assert!(report.all_succeeded(), "{:?}", report.failures);
    assert_eq!(records.len(), 3);

    for record in &records {
        record.check_complete(&p.corpus.schema).unwrap();
        assert_eq!(record.stage, RecordStage::Postprocessed);
    }
    let alpha = &records[0];
    assert_eq!(alpha.value("Title"), Some("Alpha forest inventory"));
    assert_eq!(alpha.value("License"), Some("CC-BY 4.0"));
    assert_eq!(alpha.value("Spatial resolution"), Some(NOT_AVAILABLE));

    // Both stages persisted per dataset.
    let (raw, _) = p.store.load_records(None, Some(RecordStage::Raw)).unwrap();
    let (post, _) = p
        .store
        .load_records(None, Some(RecordStage::Postprocessed))
        .unwrap();
    assert_eq!(raw.len(), 3);
    assert_eq!(post.len(), 3);
}

#[test]
fn one_unreachable_source_never_aborts_the_corpus() {
    let p = pipeline();
    let mut sources = p.corpus.manifest.sources.clone();
    sources.push(DatasetSource {
        id: "ds-down".into(),
        landing_url: "file:///nonexistent/page.html".into(),
        metadata_file_url: None,
        provider: "Gone".into(),
    });
    let (records, report) = harvest_corpus(&sources, &p.corpus.schema, &p.ctx());
    assert_eq!(records.len(), 3);
    assert_eq!(report.successes.len(), 3);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].source_id, "ds-down");
    assert!(report.failures[0].error.contains("not found"));
}

#[test]
fn raw_stage_skips_consolidation() {
    let p = pipeline();
    let mut ctx = p.ctx();
    ctx.options.stage = RecordStage::Raw;
    let record = harvest(&p.corpus.manifest.sources[0], &p.corpus.schema, &ctx).unwrap();
    assert_eq!(record.stage, RecordStage::Raw);
    assert!(p
        .store
        .load_records(None, Some(RecordStage::Postprocessed))
        .unwrap()
        .0
        .is_empty());
}

#[test]
fn evaluation_counts_each_outcome_and_scores_tp_fields() {
    let p = pipeline();
    let (records, _) = harvest_corpus(&p.corpus.manifest.sources, &p.corpus.schema, &p.ctx());

    let docs: BTreeMap<String, SourceDocument> = p
        .corpus
        .manifest
        .sources
        .iter()
        .map(|s| {
            let doc =
                ingest_source(s, &p.fetcher, Some(&p.store), &IngestConfig::default()).unwrap();
            (s.id.clone(), doc)
        })
        .collect();
    let judge = LlmJudge {
        gateway: &p.gateway,
        docs,
    };
    let table = evaluate_corpus(
        &records,
        &p.corpus.annotations,
        &p.corpus.schema,
        &p.corpus.manifest.providers(),
        Some(&judge),
    )
    .unwrap();

    let counts = table.outcome_counts();
    let (tp, fn_, tn, fp) = FIXTURE_OUTCOME_COUNTS;
    assert_eq!(counts.get("TP"), Some(&tp));
    assert_eq!(counts.get("FN"), Some(&fn_));
    assert_eq!(counts.get("TN"), Some(&tn));
    assert_eq!(counts.get("FP"), Some(&fp));

    // Structured TP exact fields reproduce the annotation verbatim.
    for row in &table.rows {
        if row.metric == Some(Metric::RougeLF1) {
            assert_eq!(row.score, Some(1.0), "{}/{}", row.source_id, row.field);
        }
    }
    // The mock judge finds fixture descriptions fully supported and on-topic.
    for metric in [Metric::Faithfulness, Metric::ResponseRelevancy] {
        let rows: Vec<_> = table
            .rows
            .iter()
            .filter(|r| r.metric == Some(metric))
            .collect();
        assert_eq!(rows.len(), 5, "{metric}");
        for row in rows {
            assert!(row.score.unwrap() > 0.99, "{metric} {}", row.source_id);
        }
    }

    let summary = retrieval_summary(&table.rows);
    assert_eq!(summary.unavailable_total, 3);
    assert_eq!(summary.unavailable_tn, 2);
    assert_eq!(summary.unavailable_fp, 1);
    assert_eq!(summary.unstructured_fn, 1);

    // CSV shape: header plus one row per table entry.
    let csv = table.to_csv();
    assert!(csv.starts_with("source_id,provider,field,stage,schema,metric,score,outcome\n"));
    assert_eq!(csv.lines().count(), table.rows.len() + 1);
}

#[test]
fn temporal_linking_normalizes_and_overlaps() {
    let p = pipeline();
    let (records, _) = harvest_corpus(&p.corpus.manifest.sources, &p.corpus.schema, &p.ctx());
    let present = NaiveDate::from_ymd_opt(2025, 6, 7).unwrap();

    let mut ranges = Vec::new();
    for record in &records {
        let raw = record.value("Temporal coverage").unwrap();
        let range = normalize_temporal_coverage(&p.gateway, raw, present).unwrap();
        ranges.push((record.source_id.clone(), range));
    }
    assert_eq!(ranges[0].1.to_string(), "1982-01-01-2005-12-31");
    assert_eq!(ranges[1].1.to_string(), "2021-08-14-2021-09-24");
    assert_eq!(ranges[2].1.to_string(), "2025-06-07-2050-12-31");

    let matrix = overlap_matrix(&ranges);
    for i in 0..3 {
        assert_eq!(matrix.values[i][i], 1.0);
        for j in 0..3 {
            if i != j {
                assert_eq!(matrix.values[i][j], 0.0, "fixture ranges are disjoint");
            }
        }
    }
}

#[test]
fn unormalizable_coverage_is_reported() {
    let p = pipeline();
    let present = NaiveDate::from_ymd_opt(2025, 6, 7).unwrap();
    let err = normalize_temporal_coverage(&p.gateway, "no dates here at all", present);
    assert!(matches!(err, Err(NormalizeError::Gateway(_))));
}

#[test]
fn similarity_matrix_excludes_na_descriptions() {
    let p = pipeline();
    let (mut records, _) = harvest_corpus(&p.corpus.manifest.sources, &p.corpus.schema, &p.ctx());
    // Blank out one description.
    let entry = records[1]
        .entities
        .iter_mut()
        .find(|e| e.field == "Description")
        .unwrap();
    entry.value = NOT_AVAILABLE.into();

    let (matrix, excluded) = similarity_matrix(&records, "Description", &p.gateway).unwrap();
    assert_eq!(matrix.ids, vec!["ds-alpha", "ds-gamma"]);
    assert_eq!(excluded.len(), 1);
    assert_eq!(excluded[0].source_id, "ds-beta");
    assert_eq!(matrix.values[0][0], 1.0);
    assert!(matrix.values[0][1] < 1.0);
    assert_eq!(matrix.values[0][1], matrix.values[1][0]);
    assert_eq!(matrix.embed_model.as_deref(), Some("mock-embed-256"));
}

#[test]
fn single_record_similarity_matrix_is_unit() {
    let p = pipeline();
    let (records, _) = harvest_corpus(&p.corpus.manifest.sources[..1], &p.corpus.schema, &p.ctx());
    let (matrix, excluded) = similarity_matrix(&records, "Description", &p.gateway).unwrap();
    assert!(excluded.is_empty());
    assert_eq!(matrix.ids, vec!["ds-alpha"]);
    assert_eq!(matrix.values, vec![vec![1.0]]);
}

#[test]
fn normalization_retries_once_on_invalid_output() {
    use metaharvest_core::gateway::scripted::{ScriptedChat, ScriptedEmbedder};
    use metaharvest_core::gateway::{Gateway, GatewayConfig};

    // First call answers garbage; the corrective retry (recognizable by the
    // quoted previous answer) yields a valid range.
    let chat = ScriptedChat::new()
        .on("Your previous answer", "2020-01-01-2020-12-31")
        .on("Convert the temporal coverage", "sometime in 2020");
    let gateway = Gateway::new(
        Box::new(chat),
        Box::new(ScriptedEmbedder::default()),
        GatewayConfig {
            backoff_ms: 0,
            ..GatewayConfig::default()
        },
        None,
    );
    let present = NaiveDate::from_ymd_opt(2025, 6, 7).unwrap();
    let range = normalize_temporal_coverage(&gateway, "during 2020", present).unwrap();
    assert_eq!(range.to_string(), "2020-01-01-2020-12-31");
    assert_eq!(gateway.stats().chat_provider_calls, 2);

    // A retry that is still invalid is a normalization failure.
    let chat = ScriptedChat::new()
        .on("Your previous answer", "still garbage")
        .on("Convert the temporal coverage", "garbage");
    let gateway = Gateway::new(
        Box::new(chat),
        Box::new(ScriptedEmbedder::default()),
        GatewayConfig {
            backoff_ms: 0,
            ..GatewayConfig::default()
        },
        None,
    );
    assert!(matches!(
        normalize_temporal_coverage(&gateway, "garbage", present),
        Err(NormalizeError::Unparseable { .. })
    ));
}

#[test]
fn sample_corpus_manifest_is_valid() {
    let text = include_str!("../../../data/sample-corpus.json");
    let manifest = metaharvest_core::corpus::parse_manifest(text).unwrap();
    assert_eq!(manifest.sources.len(), 16);
    let providers: std::collections::BTreeSet<&str> = manifest
        .sources
        .iter()
        .map(|s| s.provider.as_str())
        .collect();
    assert_eq!(providers.len(), 7);
    assert_eq!(manifest.schema_id, "lter-life");
    // One source ships a separate structured metadata record.
    assert_eq!(
        manifest
            .sources
            .iter()
            .filter(|s| s.metadata_file_url.is_some())
            .count(),
        1
    );
}

fn raw_record(entities: Vec<EntityEntry>) -> MetadataRecord {
    MetadataRecord {
        source_id: "fuzz".into(),
        schema_id: "fixture-v1".into(),
        stage: RecordStage::Raw,
        entities,
        provenance: Provenance {
            model: "mock-chat-v1".into(),
            prompt_hash: "fuzz".into(),
            prompt_version: "fuzz".into(),
            fetched_at: chrono::Utc::now(),
            inference_policy: InferencePolicy::Strict,
            truncated: false,
            downgraded: false,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Consolidation enforces one entry per schema field for arbitrary raw
    // entity multisets, including junk fields and duplicate values.
    #[test]
    fn postprocess_invariant_holds_for_arbitrary_raw_inputs(
        raw_entities in prop::collection::vec(
            (0usize..8, "[a-zA-Z0-9 ,.]{0,24}"),
            0..20,
        )
    ) {
        let schema = fixture_schema();
        let field_names: Vec<&str> = schema
            .field_names()
            .chain(["Bogus field", "Another stray"])
            .collect();
        let entities: Vec<EntityEntry> = raw_entities
            .into_iter()
            .map(|(idx, value)| EntityEntry {
                field: field_names[idx % field_names.len()].to_string(),
                value,
            })
            .collect();

        let doc = SourceDocument {
            source_id: "fuzz".into(),
            page_text: "fuzz document".into(),
            structured_text: None,
            fetched_at: chrono::Utc::now(),
            content_hash: "h".into(),
            truncated: false,
        };
        let gateway = mock_gateway(None);
        let record = post_process(&gateway, &raw_record(entities), &schema, &doc).unwrap();
        record.check_complete(&schema).unwrap();
        prop_assert_eq!(record.entities.len(), schema.fields.len());
    }
}
