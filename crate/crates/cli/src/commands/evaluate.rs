use crate::cli::{EvalLlmChoice, EvaluateArgs, MetricsChoice, StageChoice};
use crate::runtime::{build_eval_gateway, resolve_schema_arg};
use anyhow::{bail, Context, Result};
use metaharvest_core::corpus::load_manifest;
use metaharvest_core::evaluation::{
    aggregate, evaluate_corpus, load_annotations, retrieval_summary, GroupBy, LlmJudge, ScoreTable,
};
use metaharvest_core::extraction::RecordStage;
use metaharvest_core::ingest::{ingest_source, IngestConfig, SourceDocument, StaticFetcher};
use metaharvest_core::store::Store;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Scores records against annotations. Returns the number of per-dataset
/// failures (corrupt record files).
pub fn run(args: EvaluateArgs) -> Result<usize> {
    let schema = resolve_schema_arg(Some(&args.schema), None)?;
    let stage = match args.stage {
        StageChoice::Raw => RecordStage::Raw,
        StageChoice::Postprocessed => RecordStage::Postprocessed,
    };

    let group_by = args
        .group_by
        .as_deref()
        .map(|name| {
            GroupBy::parse(name).ok_or_else(|| {
                anyhow::anyhow!(
                    "unknown group key '{name}' (expected provider, field, availability, stage or schema)"
                )
            })
        })
        .transpose()?;

    let llm_metrics = matches!(args.metrics, MetricsChoice::Llm | MetricsChoice::All);
    if llm_metrics && args.llm == EvalLlmChoice::None {
        bail!(
            "metrics 'faithfulness' and 'response_relevancy' require an LLM gateway; \
             pass --llm mock or --llm live"
        );
    }

    let (records, load_errors) =
        Store::load_records_from(&args.records, Some(&schema.schema_id), Some(stage))?;
    if records.is_empty() {
        bail!(
            "no {} records for schema '{}' in {}",
            stage,
            schema.schema_id,
            args.records.display()
        );
    }
    let annotations = load_annotations(&args.annotations)?;

    let manifest = args
        .corpus
        .as_ref()
        .map(|path| load_manifest(path))
        .transpose()
        .context("failed to load corpus manifest")?;
    let providers: BTreeMap<String, String> =
        manifest.as_ref().map(|m| m.providers()).unwrap_or_default();

    let store = args
        .store
        .as_ref()
        .map(Store::open)
        .transpose()?
        .map(Arc::new);
    let gateway = build_eval_gateway(args.llm, store.clone())?;

    let judge = match (&gateway, llm_metrics) {
        (Some(gateway), true) => {
            let Some(manifest) = &manifest else {
                bail!("LLM metrics need the source documents: pass --corpus (and --store for the page cache)");
            };
            let fetcher = StaticFetcher::new(&Default::default());
            let mut docs: BTreeMap<String, SourceDocument> = BTreeMap::new();
            for source in &manifest.sources {
                let doc =
                    ingest_source(source, &fetcher, store.as_deref(), &IngestConfig::default())
                        .with_context(|| {
                            format!("failed to ingest document for '{}'", source.id)
                        })?;
                docs.insert(source.id.clone(), doc);
            }
            Some(LlmJudge { gateway, docs })
        }
        _ => None,
    };

    let mut table = evaluate_corpus(&records, &annotations, &schema, &providers, judge.as_ref())?;
    if args.metrics == MetricsChoice::Llm {
        // Drop the ROUGE rows, keep outcomes and the two LLM metrics.
        table.rows.retain(|r| {
            r.metric
                .map(|m| m != metaharvest_core::evaluation::Metric::RougeLF1)
                .unwrap_or(true)
        });
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("failed to create {}", args.out.display()))?;
    let csv_path = args.out.join("scores.csv");
    std::fs::write(&csv_path, table.to_csv())
        .with_context(|| format!("failed to write {}", csv_path.display()))?;
    println!("wrote {} ({} rows)", csv_path.display(), table.rows.len());

    print_summary(&table, group_by);

    for error in &load_errors {
        eprintln!("FAILED record load: {error}");
    }
    Ok(load_errors.len())
}

fn print_summary(table: &ScoreTable, group_by: Option<GroupBy>) {
    match &table.judge_model {
        Some(model) => println!("\ntokenizer: {}; judge model: {model}", table.tokenizer),
        None => println!("\ntokenizer: {}", table.tokenizer),
    }
    println!("outcomes: {:?}", table.outcome_counts());
    let summary = retrieval_summary(&table.rows);
    println!(
        "not retrieved: structured FN {:.1}%, unstructured FN {:.1}%; unavailable reported \
         unavailable (TN) {:.1}%, filled anyway (FP) {:.1}%",
        100.0 * summary.structured_fn_rate(),
        100.0 * summary.unstructured_fn_rate(),
        100.0 * summary.unavailable_tn_rate(),
        100.0 * summary.unavailable_fp_rate(),
    );

    let overall = aggregate(&table.rows, GroupBy::Schema);
    if !overall.is_empty() {
        println!("\nscores (mean ± SEM):");
        for row in overall {
            println!(
                "  {:20} {:22} n={:<4} {:.4} ± {:.4}",
                row.group,
                row.metric.to_string(),
                row.n,
                row.mean,
                row.sem
            );
        }
    }

    if let Some(key) = group_by {
        println!("\ngrouped by {key}:");
        for row in aggregate(&table.rows, key) {
            println!(
                "  {:24} {:22} n={:<4} {:.4} ± {:.4}",
                row.group,
                row.metric.to_string(),
                row.n,
                row.mean,
                row.sem
            );
        }
    }
}
