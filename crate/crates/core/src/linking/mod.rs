//! Dataset linking: description-embedding similarity matrices and
//! temporal-coverage overlap matrices.
//!
//! Both matrix kinds share [`LinkMatrix`]: row/column ids plus an `n × n`
//! value grid, exported as CSV (ids as header row and column, six decimal
//! places) and as JSON `{ids, kind, values}`. Cosine matrices are symmetric
//! with a unit diagonal; overlap matrices are one-sided (`values[i][j]` is
//! the fraction of dataset `i`'s time span covered by dataset `j`) and only
//! their diagonal is guaranteed.

mod temporal;

pub use temporal::{
    normalize_temporal_coverage, parse_canonical_range, temporal_overlap_fraction,
    CanonicalDateRange, NormalizeError, TemporalError,
};
pub(crate) use temporal::{NORMALIZE_MARKER, SECTION_COVERAGE};

use crate::extraction::MetadataRecord;
use crate::gateway::{EmbeddingVector, Gateway, GatewayError};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    CosineSimilarity,
    TemporalOverlap,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::CosineSimilarity => write!(f, "cosine_similarity"),
            MatrixKind::TemporalOverlap => write!(f, "temporal_overlap"),
        }
    }
}

/// A square matrix over dataset ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMatrix {
    pub ids: Vec<String>,
    pub kind: MatrixKind,
    pub values: Vec<Vec<f64>>,
    /// Embedding model behind a similarity matrix; mixing models within one
    /// matrix is rejected at build time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_model: Option<String>,
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("records embed with different models: {0}")]
    MixedModels(String),
    #[error("no record carries a usable '{field}' value")]
    NoUsableRecords { field: String },
    #[error("field '{field}' is not part of schema '{schema_id}'")]
    FieldNotInSchema { field: String, schema_id: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// `dot(a, b) / (‖a‖ ‖b‖)`. Errors on dimension mismatch or a zero norm.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, LinkError> {
    if a.values.len() != b.values.len() {
        return Err(LinkError::DimensionMismatch {
            left: a.values.len(),
            right: b.values.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(LinkError::ZeroNorm);
    }
    // Rounding can push identical vectors a few ulps past 1; the result is a
    // cosine and stays in [-1, 1].
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// Records excluded from a matrix, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcludedRecord {
    pub source_id: String,
    pub reason: String,
}

/// Embeds one field of every record (each value embedded once, cached by the
/// gateway) and fills the symmetric cosine-similarity matrix. Records whose
/// field is `N/A` or missing are excluded and reported.
pub fn similarity_matrix(
    records: &[MetadataRecord],
    field: &str,
    gateway: &Gateway,
) -> Result<(LinkMatrix, Vec<ExcludedRecord>), LinkError> {
    let mut excluded = Vec::new();
    let mut usable: Vec<(&str, &str)> = Vec::new();
    for record in records {
        if record.has_value(field) {
            usable.push((record.source_id.as_str(), record.value(field).unwrap()));
        } else {
            excluded.push(ExcludedRecord {
                source_id: record.source_id.clone(),
                reason: format!("field '{field}' is not available"),
            });
        }
    }
    if usable.is_empty() {
        return Err(LinkError::NoUsableRecords {
            field: field.to_string(),
        });
    }
    usable.sort_by_key(|(id, _)| *id);

    let mut vectors: Vec<EmbeddingVector> = Vec::with_capacity(usable.len());
    for (_, value) in &usable {
        vectors.push(gateway.embed(value)?);
    }
    let model = vectors[0].model.clone();
    if let Some(other) = vectors.iter().find(|v| v.model != model) {
        return Err(LinkError::MixedModels(format!(
            "{model} vs {}",
            other.model
        )));
    }

    let ids: Vec<String> = usable.iter().map(|(id, _)| id.to_string()).collect();
    let rows: Vec<Result<Vec<f64>, LinkError>> = crate::par::map_collect(&vectors, |a| {
        vectors
            .iter()
            .map(|b| cosine_similarity(a, b))
            .collect::<Result<Vec<f64>, LinkError>>()
    });
    let mut values = Vec::with_capacity(rows.len());
    for row in rows {
        values.push(row?);
    }
    // Exact unit diagonal and exact symmetry: the dot-product route already
    // yields these to rounding error; pin them so exports are clean.
    #[allow(clippy::needless_range_loop)]
    for i in 0..values.len() {
        values[i][i] = 1.0;
        for j in 0..i {
            let lower = values[i][j];
            values[j][i] = lower;
        }
    }
    Ok((
        LinkMatrix {
            ids,
            kind: MatrixKind::CosineSimilarity,
            values,
            embed_model: Some(model),
        },
        excluded,
    ))
}

/// Builds the one-sided overlap matrix:
/// `values[i][j] = overlap_days(i, j) / duration_days(i)`.
pub fn overlap_matrix(ranges: &[(String, CanonicalDateRange)]) -> LinkMatrix {
    let ids: Vec<String> = ranges.iter().map(|(id, _)| id.clone()).collect();
    let values: Vec<Vec<f64>> = crate::par::map_collect(ranges, |(_, range_i)| {
        ranges
            .iter()
            .map(|(_, range_j)| temporal_overlap_fraction(range_i, range_j))
            .collect()
    });
    LinkMatrix {
        ids,
        kind: MatrixKind::TemporalOverlap,
        values,
        embed_model: None,
    }
}

impl LinkMatrix {
    /// CSV with the ids as header row and first column, values with six
    /// decimal places.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend(self.ids.iter().cloned());
        writer.write_record(&header).expect("csv header");
        for (id, row) in self.ids.iter().zip(&self.values) {
            let mut record = vec![id.clone()];
            record.extend(row.iter().map(|v| format!("{v:.6}")));
            writer.write_record(&record).expect("csv row");
        }
        String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("matrix serializes");
        text.push('\n');
        text
    }
}
