//! Mean ± SEM aggregation and retrieval-rate summaries over score tables.

use super::{Metric, Outcome, ScoreRow};
use crate::evaluation::Availability;
use std::collections::BTreeMap;
use std::fmt;

/// Grouping key for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Provider,
    Field,
    Availability,
    Stage,
    Schema,
}

impl GroupBy {
    pub fn parse(name: &str) -> Option<GroupBy> {
        match name.to_ascii_lowercase().as_str() {
            "provider" => Some(GroupBy::Provider),
            "field" => Some(GroupBy::Field),
            "availability" => Some(GroupBy::Availability),
            "stage" => Some(GroupBy::Stage),
            "schema" => Some(GroupBy::Schema),
            _ => None,
        }
    }

    fn key(&self, row: &ScoreRow) -> String {
        match self {
            GroupBy::Provider => row.provider.clone(),
            GroupBy::Field => row.field.clone(),
            GroupBy::Availability => row.availability.to_string(),
            GroupBy::Stage => row.stage.to_string(),
            GroupBy::Schema => row.schema_id.clone(),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GroupBy::Provider => "provider",
            GroupBy::Field => "field",
            GroupBy::Availability => "availability",
            GroupBy::Stage => "stage",
            GroupBy::Schema => "schema",
        };
        write!(f, "{name}")
    }
}

/// Mean and standard error of the mean for one (group, metric) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub group: String,
    pub metric: Metric,
    pub n: usize,
    pub mean: f64,
    pub sem: f64,
}

/// Mean and SEM of a sample. SEM uses the population standard deviation:
/// `sem = sqrt(sum((x - mean)^2) / n) / sqrt(n)`. Returns `None` for an
/// empty sample; a single observation has SEM 0.
pub fn mean_sem(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt() / n.sqrt()))
}

/// Aggregates scored rows into mean ± SEM per (group, metric).
pub fn aggregate(rows: &[ScoreRow], group_by: GroupBy) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(String, Metric), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if let (Some(metric), Some(score)) = (row.metric, row.score) {
            cells
                .entry((group_by.key(row), metric))
                .or_default()
                .push(score);
        }
    }
    cells
        .into_iter()
        .filter_map(|((group, metric), values)| {
            mean_sem(&values).map(|(mean, sem)| AggregateRow {
                group,
                metric,
                n: values.len(),
                mean,
                sem,
            })
        })
        .collect()
}

/// Retrieval-rate accounting split by annotation availability: the fraction
/// of available structured fields not retrieved (FN), available unstructured
/// fields not recognised (FN), and unavailable fields correctly reported
/// unavailable (TN) or filled in anyway (FP).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrievalSummary {
    pub structured_total: usize,
    pub structured_fn: usize,
    pub unstructured_total: usize,
    pub unstructured_fn: usize,
    pub unavailable_total: usize,
    pub unavailable_tn: usize,
    pub unavailable_fp: usize,
}

impl RetrievalSummary {
    pub fn structured_fn_rate(&self) -> f64 {
        rate(self.structured_fn, self.structured_total)
    }

    pub fn unstructured_fn_rate(&self) -> f64 {
        rate(self.unstructured_fn, self.unstructured_total)
    }

    pub fn unavailable_tn_rate(&self) -> f64 {
        rate(self.unavailable_tn, self.unavailable_total)
    }

    pub fn unavailable_fp_rate(&self) -> f64 {
        rate(self.unavailable_fp, self.unavailable_total)
    }
}

fn rate(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Builds the retrieval summary from outcome rows (one per record × field).
pub fn retrieval_summary(rows: &[ScoreRow]) -> RetrievalSummary {
    let mut summary = RetrievalSummary::default();
    for row in rows.iter().filter(|r| r.metric.is_none()) {
        match row.availability {
            Availability::Structured => {
                summary.structured_total += 1;
                if row.outcome == Outcome::FalseNegative {
                    summary.structured_fn += 1;
                }
            }
            Availability::Unstructured => {
                summary.unstructured_total += 1;
                if row.outcome == Outcome::FalseNegative {
                    summary.unstructured_fn += 1;
                }
            }
            Availability::Unavailable => {
                summary.unavailable_total += 1;
                match row.outcome {
                    Outcome::TrueNegative => summary.unavailable_tn += 1,
                    Outcome::FalsePositive => summary.unavailable_fp += 1,
                    _ => {}
                }
            }
        }
    }
    summary
}
