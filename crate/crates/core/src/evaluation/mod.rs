//! Scoring harvested records against ground-truth annotations.
//!
//! Every (record, field) pair is first classified into a retrieval outcome by
//! crossing the annotation's availability with whether the record reported a
//! value: present+value → TP, present+`N/A` → FN, unavailable+`N/A` → TN,
//! unavailable+value → FP. Accuracy is then scored for TP pairs only:
//! exact-match fields with ROUGE-L F1, fuzzy fields with LLM-judged
//! faithfulness and response relevancy when a judge gateway is supplied.
//! FN/TN/FP pairs are reported as rates, keeping accuracy and retrieval
//! accounting separate. All scores lie in [0, 1].

mod aggregate;
mod llm_metrics;
mod rouge;

pub use aggregate::{
    aggregate, mean_sem, retrieval_summary, AggregateRow, GroupBy, RetrievalSummary,
};
pub use llm_metrics::{faithfulness, response_relevancy, template_question, RELEVANCY_QUESTIONS};
pub(crate) use llm_metrics::{
    CLAIMS_MARKER, QUESTIONS_MARKER, SECTION_CLAIMS, SECTION_DOCUMENT, SECTION_TEXT, VERDICT_MARKER,
};
pub use rouge::{lcs_len, rouge_l_f1, tokenize, TOKENIZER_ID};

use crate::extraction::{MetadataRecord, RecordStage};
use crate::gateway::{Gateway, GatewayError};
use crate::ingest::SourceDocument;
use crate::schema::{MatchMode, MetadataSchema};
use crate::NOT_AVAILABLE;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Where a field's ground-truth value lives on the source, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Availability {
    /// Absent from the source; the annotated value is `N/A`.
    Unavailable,
    /// Clearly labelled as metadata on the source.
    Structured,
    /// Only present in free-form text.
    Unstructured,
}

impl Availability {
    pub fn is_present(self) -> bool {
        !matches!(self, Availability::Unavailable)
    }
}

impl fmt::Display for Availability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Availability::Unavailable => write!(f, "unavailable"),
            Availability::Structured => write!(f, "structured"),
            Availability::Unstructured => write!(f, "unstructured"),
        }
    }
}

/// Ground truth for one field of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub value: String,
    pub availability: Availability,
}

/// Manually annotated ground truth for one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    pub source_id: String,
    pub schema_id: String,
    pub entries: BTreeMap<String, AnnotationEntry>,
}

impl GroundTruthAnnotation {
    /// Enforces the availability invariant: `unavailable` ⇔ value is `N/A`.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (field, entry) in &self.entries {
            let is_na = entry.value == NOT_AVAILABLE;
            let unavailable = entry.availability == Availability::Unavailable;
            if is_na != unavailable {
                return Err(EvalError::InvalidAnnotation {
                    source_id: self.source_id.clone(),
                    field: field.clone(),
                    message: format!(
                        "availability '{}' conflicts with value '{}'",
                        entry.availability, entry.value
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Cross-classification of annotation availability vs the harvested value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Present on the source and retrieved.
    TruePositive,
    /// Present on the source but reported `N/A`.
    FalseNegative,
    /// Absent from the source and reported `N/A`.
    TrueNegative,
    /// Absent from the source but a value was reported anyway.
    FalsePositive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::TruePositive => write!(f, "TP"),
            Outcome::FalseNegative => write!(f, "FN"),
            Outcome::TrueNegative => write!(f, "TN"),
            Outcome::FalsePositive => write!(f, "FP"),
        }
    }
}

/// Classifies one (annotation entry, harvested value) pair. Total: exactly
/// one outcome for every pair.
pub fn classify_retrieval(annotation: &AnnotationEntry, record_value: &str) -> Outcome {
    let retrieved = record_value != NOT_AVAILABLE;
    match (annotation.availability.is_present(), retrieved) {
        (true, true) => Outcome::TruePositive,
        (true, false) => Outcome::FalseNegative,
        (false, false) => Outcome::TrueNegative,
        (false, true) => Outcome::FalsePositive,
    }
}

/// Accuracy metric attached to a score row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RougeLF1,
    Faithfulness,
    ResponseRelevancy,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::RougeLF1 => write!(f, "rouge_l_f1"),
            Metric::Faithfulness => write!(f, "faithfulness"),
            Metric::ResponseRelevancy => write!(f, "response_relevancy"),
        }
    }
}

/// One row of the score table. Rows with `metric = None` carry the retrieval
/// outcome for a (dataset, field) pair; rows with a metric carry an accuracy
/// score in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub source_id: String,
    pub provider: String,
    pub field: String,
    pub stage: RecordStage,
    pub schema_id: String,
    pub availability: Availability,
    pub metric: Option<Metric>,
    pub score: Option<f64>,
    pub outcome: Outcome,
}

/// The scored corpus plus the metadata needed to compare tables across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    pub tokenizer: String,
    pub judge_model: Option<String>,
}

impl ScoreTable {
    pub fn outcome_rows(&self) -> impl Iterator<Item = &ScoreRow> {
        self.rows.iter().filter(|r| r.metric.is_none())
    }

    pub fn outcome_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for row in self.outcome_rows() {
            *counts.entry(row.outcome.to_string()).or_default() += 1;
        }
        counts
    }

    /// Serializes the table as CSV with one row per (dataset, field, metric)
    /// plus one outcome row per (dataset, field).
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "source_id",
                "provider",
                "field",
                "stage",
                "schema",
                "metric",
                "score",
                "outcome",
            ])
            .expect("csv header");
        for row in &self.rows {
            writer
                .write_record([
                    row.source_id.as_str(),
                    row.provider.as_str(),
                    row.field.as_str(),
                    &row.stage.to_string(),
                    row.schema_id.as_str(),
                    &row.metric.map(|m| m.to_string()).unwrap_or_default(),
                    &row.score.map(|s| format!("{s:.6}")).unwrap_or_default(),
                    &row.outcome.to_string(),
                ])
                .expect("csv row");
        }
        String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

/// Judge context for the LLM metrics: the gateway plus the source documents
/// faithfulness verifies claims against.
pub struct LlmJudge<'a> {
    pub gateway: &'a Gateway,
    pub docs: BTreeMap<String, SourceDocument>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("annotation for '{source_id}' field '{field}' is invalid: {message}")]
    InvalidAnnotation {
        source_id: String,
        field: String,
        message: String,
    },
    #[error("missing annotations for record(s): {0}")]
    MissingAnnotations(String),
    #[error("annotation for '{source_id}' lacks an entry for schema field '{field}'")]
    MissingField { source_id: String, field: String },
    #[error("record '{source_id}' lacks an entry for schema field '{field}'")]
    MissingRecordField { source_id: String, field: String },
    #[error("no source document for '{source_id}' (required by faithfulness)")]
    MissingDocument { source_id: String },
    #[error("failed to read annotation file {path}: {message}")]
    AnnotationFile { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Scores a corpus of records against annotations.
///
/// Emits, per (record, field): one outcome row, plus a ROUGE-L row for TP
/// exact-match fields, plus faithfulness and relevancy rows for TP fuzzy
/// fields when `judge` is supplied. `providers` maps source ids to provider
/// names for the report (unknown sources get an empty provider).
pub fn evaluate_corpus(
    records: &[MetadataRecord],
    annotations: &[GroundTruthAnnotation],
    schema: &MetadataSchema,
    providers: &BTreeMap<String, String>,
    judge: Option<&LlmJudge<'_>>,
) -> Result<ScoreTable, EvalError> {
    for annotation in annotations {
        annotation.validate()?;
    }
    let by_id: BTreeMap<&str, &GroundTruthAnnotation> = annotations
        .iter()
        .map(|a| (a.source_id.as_str(), a))
        .collect();

    let missing: Vec<&str> = records
        .iter()
        .filter(|r| !by_id.contains_key(r.source_id.as_str()))
        .map(|r| r.source_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingAnnotations(missing.join(", ")));
    }

    let mut ordered: Vec<&MetadataRecord> = records.iter().collect();
    ordered.sort_by(|a, b| (&a.source_id, a.stage as u8).cmp(&(&b.source_id, b.stage as u8)));

    // Per-record scoring is independent; run it on the worker pool.
    let results: Vec<Result<Vec<ScoreRow>, EvalError>> =
        crate::par::map_collect(&ordered, |record| {
            let annotation = by_id[record.source_id.as_str()];
            score_record(record, annotation, schema, providers, judge)
        });

    let mut rows = Vec::new();
    for result in results {
        rows.extend(result?);
    }
    Ok(ScoreTable {
        rows,
        tokenizer: TOKENIZER_ID.to_string(),
        judge_model: judge.map(|j| j.gateway.config().chat_model.clone()),
    })
}

fn score_record(
    record: &MetadataRecord,
    annotation: &GroundTruthAnnotation,
    schema: &MetadataSchema,
    providers: &BTreeMap<String, String>,
    judge: Option<&LlmJudge<'_>>,
) -> Result<Vec<ScoreRow>, EvalError> {
    let provider = providers
        .get(&record.source_id)
        .cloned()
        .unwrap_or_default();
    let mut rows = Vec::new();
    for field in &schema.fields {
        let entry = annotation
            .entries
            .get(&field.name)
            .ok_or_else(|| EvalError::MissingField {
                source_id: annotation.source_id.clone(),
                field: field.name.clone(),
            })?;
        let value = record
            .value(&field.name)
            .ok_or_else(|| EvalError::MissingRecordField {
                source_id: record.source_id.clone(),
                field: field.name.clone(),
            })?;
        let outcome = classify_retrieval(entry, value);
        let base = ScoreRow {
            source_id: record.source_id.clone(),
            provider: provider.clone(),
            field: field.name.clone(),
            stage: record.stage,
            schema_id: record.schema_id.clone(),
            availability: entry.availability,
            metric: None,
            score: None,
            outcome,
        };
        rows.push(base.clone());

        if outcome != Outcome::TruePositive {
            continue;
        }
        match field.match_mode {
            MatchMode::Exact => {
                rows.push(ScoreRow {
                    metric: Some(Metric::RougeLF1),
                    score: Some(rouge_l_f1(value, &entry.value)),
                    ..base
                });
            }
            MatchMode::Fuzzy => {
                if let Some(judge) = judge {
                    let doc = judge.docs.get(&record.source_id).ok_or_else(|| {
                        EvalError::MissingDocument {
                            source_id: record.source_id.clone(),
                        }
                    })?;
                    let mut doc_text = doc.page_text.clone();
                    if let Some(structured) = &doc.structured_text {
                        doc_text.push('\n');
                        doc_text.push_str(structured);
                    }
                    rows.push(ScoreRow {
                        metric: Some(Metric::Faithfulness),
                        score: Some(faithfulness(judge.gateway, value, &doc_text)?),
                        ..base.clone()
                    });
                    rows.push(ScoreRow {
                        metric: Some(Metric::ResponseRelevancy),
                        score: Some(response_relevancy(judge.gateway, value, &field.name)?),
                        ..base
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Loads every annotation file (`*.json`, one object per dataset) in a
/// directory.
pub fn load_annotations(dir: &Path) -> Result<Vec<GroundTruthAnnotation>, EvalError> {
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::AnnotationFile {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    let mut annotations = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|e| EvalError::AnnotationFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let annotation: GroundTruthAnnotation =
            serde_json::from_str(&text).map_err(|e| EvalError::AnnotationFile {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        annotation.validate()?;
        annotations.push(annotation);
    }
    Ok(annotations)
}
