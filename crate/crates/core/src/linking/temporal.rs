//! Canonical date ranges and one-sided temporal overlap.
//!
//! Free-form temporal coverage is converted by one LLM call into the strict
//! serialization `YYYY-MM-DD-YYYY-MM-DD`, then parsed and validated
//! deterministically. Dates use the proleptic Gregorian calendar, so ranges
//! reaching back before 1970 (bird observation archives start in 1800) count
//! days correctly. Durations are inclusive day counts: a one-day range has
//! duration 1, which also keeps the overlap fraction free of zero divisions.

use crate::gateway::{Gateway, GatewayError, Message};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub(crate) const NORMALIZE_MARKER: &str =
    "Convert the temporal coverage below to the exact format YYYY-MM-DD-YYYY-MM-DD";
pub(crate) const SECTION_COVERAGE: &str = "## TEMPORAL COVERAGE";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemporalError {
    #[error("'{0}' does not match the YYYY-MM-DD-YYYY-MM-DD grammar")]
    Grammar(String),
    #[error("'{0}' is not a valid calendar date")]
    InvalidDate(String),
    #[error("range start {start} is after range end {end}")]
    Reversed { start: String, end: String },
}

/// A validated closed date range, serialized exactly as
/// `YYYY-MM-DD-YYYY-MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CanonicalDateRange {
    start: NaiveDate,
    end: NaiveDate,
}

impl CanonicalDateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, TemporalError> {
        if start > end {
            return Err(TemporalError::Reversed {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(CanonicalDateRange { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// Inclusive day count; at least 1.
    pub fn duration_days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    /// Inclusive days shared with `other`; 0 when disjoint. Symmetric.
    pub fn overlap_days(&self, other: &CanonicalDateRange) -> i64 {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        ((end - start).num_days() + 1).max(0)
    }
}

impl fmt::Display for CanonicalDateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02}-{:04}-{:02}-{:02}",
            self.start.year(),
            self.start.month(),
            self.start.day(),
            self.end.year(),
            self.end.month(),
            self.end.day()
        )
    }
}

impl TryFrom<String> for CanonicalDateRange {
    type Error = TemporalError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_canonical_range(&value)
    }
}

impl From<CanonicalDateRange> for String {
    fn from(range: CanonicalDateRange) -> String {
        range.to_string()
    }
}

/// Parses the strict grammar `\d{4}-\d{2}-\d{2}-\d{4}-\d{2}-\d{2}`,
/// calendar-validating both dates (leap years included) and rejecting
/// reversed ranges.
pub fn parse_canonical_range(text: &str) -> Result<CanonicalDateRange, TemporalError> {
    let text = text.trim();
    let bytes = text.as_bytes();
    if bytes.len() != 21 {
        return Err(TemporalError::Grammar(text.to_string()));
    }
    for (i, b) in bytes.iter().enumerate() {
        let expect_dash = matches!(i, 4 | 7 | 10 | 15 | 18);
        if expect_dash != (*b == b'-') || (!expect_dash && !b.is_ascii_digit()) {
            return Err(TemporalError::Grammar(text.to_string()));
        }
    }
    let start = parse_date(&text[..10])?;
    let end = parse_date(&text[11..])?;
    CanonicalDateRange::new(start, end)
}

fn parse_date(text: &str) -> Result<NaiveDate, TemporalError> {
    let year: i32 = text[..4].parse().expect("digits checked");
    let month: u32 = text[5..7].parse().expect("digits checked");
    let day: u32 = text[8..10].parse().expect("digits checked");
    NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| TemporalError::InvalidDate(text.to_string()))
}

/// Fraction of range `i` covered by range `j`, in inclusive days:
/// `overlap(i, j) / duration(i)`. 0 for disjoint ranges, 1 when `i ⊆ j`.
/// One-sided: the matrix it fills is not generally symmetric.
pub fn temporal_overlap_fraction(i: &CanonicalDateRange, j: &CanonicalDateRange) -> f64 {
    i.overlap_days(j) as f64 / i.duration_days() as f64
}

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("model output '{output}' failed canonical validation after retry: {source}")]
    Unparseable {
        output: String,
        #[source]
        source: TemporalError,
    },
}

/// Converts free-form temporal coverage text into a canonical range with one
/// LLM call, then validates the output deterministically. On grammar failure
/// the model gets one corrective retry before the dataset is reported as a
/// normalization failure. "Present"-like wordings map to `present_date`.
pub fn normalize_temporal_coverage(
    gateway: &Gateway,
    raw: &str,
    present_date: NaiveDate,
) -> Result<CanonicalDateRange, NormalizeError> {
    let base_prompt = normalize_prompt(raw, present_date);
    let req = gateway.chat_request(vec![Message::user(base_prompt.clone())]);
    let first = gateway.complete(&req)?;
    match parse_canonical_range(first.trim()) {
        Ok(range) => Ok(range),
        Err(first_err) => {
            let retry_prompt = format!(
                "{base_prompt}\nYour previous answer \"{}\" was invalid: {first_err}. Answer \
                 again with only the corrected range.",
                first.trim()
            );
            let retry_req = gateway.chat_request(vec![Message::user(retry_prompt)]);
            let second = gateway.complete(&retry_req)?;
            parse_canonical_range(second.trim()).map_err(|e| NormalizeError::Unparseable {
                output: second.trim().to_string(),
                source: e,
            })
        }
    }
}

fn normalize_prompt(raw: &str, present_date: NaiveDate) -> String {
    format!(
        "{NORMALIZE_MARKER} (start date, then end date, zero-padded).\n\
         Treat \"Present\", \"to date\" or \"ongoing\" as {present_date}.\n\
         If only a year is given, use January 1 as the start and December 31 as the end. \
         If several periods are listed, report the single spanning range. \
         Answer with the formatted range only.\n\n\
         {SECTION_COVERAGE}\n{raw}\n"
    )
}
