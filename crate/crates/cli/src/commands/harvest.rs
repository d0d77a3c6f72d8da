use crate::cli::{HarvestArgs, PolicyChoice, StageChoice};
use crate::runtime::{build_gateway, resolve_schema_arg, ModelFlags};
use anyhow::{Context, Result};
use metaharvest_core::corpus::load_manifest;
use metaharvest_core::extraction::{
    harvest_corpus, HarvestContext, HarvestOptions, InferencePolicy, RecordStage,
};
use metaharvest_core::ingest::{FetchConfig, IngestConfig, StaticFetcher};
use metaharvest_core::store::Store;
use std::sync::Arc;
use std::time::Duration;

/// Runs a corpus harvest. Returns the number of per-dataset failures.
pub fn run(args: HarvestArgs) -> Result<usize> {
    let manifest = load_manifest(&args.corpus)
        .with_context(|| format!("failed to load corpus manifest {}", args.corpus.display()))?;
    let schema = resolve_schema_arg(args.schema.as_deref(), Some(&manifest.schema_id))?;

    // Gateway configuration is validated before any store write or fetch.
    let store = Arc::new(Store::open(&args.out)?);
    let gateway = build_gateway(
        args.llm,
        Some(store.clone()),
        ModelFlags {
            chat_model: args.model.clone(),
            embed_model: args.embed_model.clone(),
        },
        manifest.llm.as_ref(),
    )?;

    let fetch_config = FetchConfig {
        timeout: Duration::from_secs(args.timeout_secs),
        user_agent: args
            .user_agent
            .clone()
            .unwrap_or_else(|| FetchConfig::default().user_agent),
        ..FetchConfig::default()
    };
    let fetcher = StaticFetcher::new(&fetch_config);
    let ctx = HarvestContext {
        renderer: &fetcher,
        gateway: &gateway,
        store: &store,
        ingest: IngestConfig {
            fetch: fetch_config.clone(),
            text_cap: args.text_cap,
        },
        options: HarvestOptions {
            policy: match args.policy {
                PolicyChoice::Strict => InferencePolicy::Strict,
                PolicyChoice::BestGuess => InferencePolicy::BestGuess,
            },
            stage: match args.stage {
                StageChoice::Raw => RecordStage::Raw,
                StageChoice::Postprocessed => RecordStage::Postprocessed,
            },
            jobs: Some(args.jobs.max(1)),
        },
    };

    let (records, report) = harvest_corpus(&manifest.sources, &schema, &ctx);

    println!(
        "harvested {}/{} dataset(s) into {}",
        report.successes.len(),
        manifest.sources.len(),
        store.records_dir().display()
    );
    if !report.truncated.is_empty() {
        println!("truncated page text: {}", report.truncated.join(", "));
    }
    let stats = gateway.stats();
    eprintln!(
        "gateway: {} provider call(s), {} cache hit(s); http requests: {}",
        stats.provider_calls(),
        stats.cache_hits,
        fetcher.http_requests()
    );

    let report_json = serde_json::json!({
        "corpus_id": manifest.corpus_id,
        "schema_id": schema.schema_id,
        "model": gateway.config().chat_model,
        "stage": match args.stage { StageChoice::Raw => "raw", StageChoice::Postprocessed => "postprocessed" },
        "successes": report.successes,
        "failures": report.failures.iter().map(|f| {
            serde_json::json!({"source_id": f.source_id, "error": f.error})
        }).collect::<Vec<_>>(),
        "truncated": report.truncated,
        "records": records.len(),
    });
    store.write_output("report.json", format!("{:#}\n", report_json).as_bytes())?;

    for failure in &report.failures {
        eprintln!("FAILED {}: {}", failure.source_id, failure.error);
    }
    Ok(report.failures.len())
}
