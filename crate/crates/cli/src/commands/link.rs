use crate::cli::{KindChoice, LinkArgs, StageChoice};
use crate::runtime::{build_gateway, ModelFlags};
use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use metaharvest_core::extraction::{MetadataRecord, RecordStage};
use metaharvest_core::linking::{
    normalize_temporal_coverage, overlap_matrix, similarity_matrix, CanonicalDateRange, LinkMatrix,
};
use metaharvest_core::store::Store;
use std::sync::Arc;

/// Builds one link matrix. Returns the number of per-dataset failures.
pub fn run(args: LinkArgs) -> Result<usize> {
    let stage = match args.stage {
        StageChoice::Raw => RecordStage::Raw,
        StageChoice::Postprocessed => RecordStage::Postprocessed,
    };
    let (records, load_errors) = Store::load_records_from(&args.records, None, Some(stage))?;
    if records.is_empty() {
        bail!("no {stage} records in {}", args.records.display());
    }
    if let Some(schema_arg) = &args.schema {
        let schema = metaharvest_core::schema::resolve_schema(schema_arg)?;
        let field = effective_field(&args);
        if schema.field(&field).is_none() {
            bail!(
                "field '{field}' is not part of schema '{}'",
                schema.schema_id
            );
        }
    }

    let store = Arc::new(Store::open(args.store.as_ref().unwrap_or(&args.out))?);
    let gateway = build_gateway(args.llm, Some(store.clone()), ModelFlags::none(), None)?;

    let mut failures = load_errors.len();
    for error in &load_errors {
        eprintln!("FAILED record load: {error}");
    }

    let (matrix, name) = match args.kind {
        KindChoice::Similarity => {
            let field = effective_field(&args);
            let (matrix, excluded) = similarity_matrix(&records, &field, &gateway)?;
            for ex in &excluded {
                println!("excluded {}: {}", ex.source_id, ex.reason);
            }
            (matrix, "cosine_similarity".to_string())
        }
        KindChoice::Temporal => {
            let field = effective_field(&args);
            let present = match &args.present_date {
                Some(text) => text
                    .parse::<NaiveDate>()
                    .with_context(|| format!("--present-date '{text}' is not YYYY-MM-DD"))?,
                None => chrono::Utc::now().date_naive(),
            };
            let (matrix, temporal_failures) = build_overlap(&records, &field, present, &gateway)?;
            failures += temporal_failures;
            (matrix, "temporal_overlap".to_string())
        }
    };

    let out_store = Store::open(&args.out)?;
    let csv_path =
        out_store.write_output(&format!("matrices/{name}.csv"), matrix.to_csv().as_bytes())?;
    let json_path = out_store.write_output(
        &format!("matrices/{name}.json"),
        matrix.to_json().as_bytes(),
    )?;
    println!(
        "wrote {} and {} ({} × {})",
        csv_path.display(),
        json_path.display(),
        matrix.ids.len(),
        matrix.ids.len()
    );
    Ok(failures)
}

fn effective_field(args: &LinkArgs) -> String {
    args.field.clone().unwrap_or_else(|| {
        match args.kind {
            KindChoice::Similarity => "Description",
            KindChoice::Temporal => "Temporal coverage",
        }
        .to_string()
    })
}

fn build_overlap(
    records: &[MetadataRecord],
    field: &str,
    present: NaiveDate,
    gateway: &metaharvest_core::gateway::Gateway,
) -> Result<(LinkMatrix, usize)> {
    let mut ranges: Vec<(String, CanonicalDateRange)> = Vec::new();
    let mut failures = 0;
    for record in records {
        if !record.has_value(field) {
            println!(
                "excluded {}: field '{field}' is not available",
                record.source_id
            );
            continue;
        }
        let raw = record.value(field).unwrap();
        match normalize_temporal_coverage(gateway, raw, present) {
            Ok(range) => ranges.push((record.source_id.clone(), range)),
            Err(e) => {
                eprintln!("FAILED {}: cannot normalize '{raw}': {e}", record.source_id);
                failures += 1;
            }
        }
    }
    if ranges.is_empty() {
        bail!("no record yielded a usable '{field}' range");
    }
    ranges.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((overlap_matrix(&ranges), failures))
}
