//! Deterministic offline models behind `--llm mock`.
//!
//! [`MockChat`] routes on the marker lines the prompt builders emit and
//! answers each task with a fixed rule:
//!
//! - extraction: scan the document blocks for `<field>: <value>` lines whose
//!   label matches a listed entity type (case-insensitive, with or without an
//!   element-path prefix) and report one tuple line per hit
//! - consolidation: re-group the raw entity lines, join multiples with "; ",
//!   fill missing fields with `N/A`
//! - claims: split the text on sentence and "; " boundaries
//! - verdicts: a claim is supported iff its normalized text occurs in the
//!   normalized document
//! - questions: repeat the canonical field question
//! - temporal normalization: a heuristic date-mention parser (ISO dates,
//!   month names, bare years, "Present") spanning the earliest start and the
//!   latest end
//!
//! [`MockEmbedder`] hashes the whole text into a seed and expands it into a
//! unit vector, so identical texts embed identically and distinct texts
//! collide with negligible probability. Everything here is a pure function
//! of its prompt: harvests under the mock are exactly reproducible.

use crate::evaluation::{
    template_question, CLAIMS_MARKER, QUESTIONS_MARKER, RELEVANCY_QUESTIONS, SECTION_CLAIMS,
    SECTION_DOCUMENT as METRIC_SECTION_DOCUMENT, SECTION_TEXT, VERDICT_MARKER,
};
use crate::extraction::prompt::{
    EXTRACT_MARKER, POSTPROCESS_MARKER, SECTION_DOCUMENT, SECTION_ENTITY_TYPES,
    SECTION_OUTPUT_FORMAT, SECTION_RAW_ENTITIES, SECTION_RULES, SECTION_STRUCTURED,
};
use crate::gateway::{
    ChatModel, ChatRequest, EmbeddingModel, Gateway, GatewayConfig, ProviderError,
};
use crate::linking::{NORMALIZE_MARKER, SECTION_COVERAGE};
use crate::store::Store;
use crate::NOT_AVAILABLE;
use chrono::{Datelike, NaiveDate};
use regex::Regex;
use std::sync::Arc;
use std::sync::OnceLock;

pub const MOCK_CHAT_MODEL: &str = "mock-chat-v1";
pub const MOCK_EMBED_MODEL: &str = "mock-embed-256";
const MOCK_EMBED_DIM: usize = 256;

/// Assembles a gateway over the offline models.
pub fn mock_gateway(store: Option<Arc<Store>>) -> Gateway {
    let config = GatewayConfig {
        chat_model: MOCK_CHAT_MODEL.into(),
        embed_model: MOCK_EMBED_MODEL.into(),
        backoff_ms: 0,
        ..GatewayConfig::default()
    };
    Gateway::new(
        Box::new(MockChat),
        Box::new(MockEmbedder::default()),
        config,
        store,
    )
}

/// Rule-based offline chat model.
pub struct MockChat;

impl ChatModel for MockChat {
    fn endpoint(&self) -> &str {
        "mock:"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let text = req.joined_text();
        if text.contains(EXTRACT_MARKER) {
            Ok(answer_extraction(&text))
        } else if text.contains(POSTPROCESS_MARKER) {
            Ok(answer_postprocess(&text))
        } else if text.contains(CLAIMS_MARKER) {
            Ok(answer_claims(&text))
        } else if text.contains(VERDICT_MARKER) {
            Ok(answer_verdicts(&text))
        } else if text.contains(QUESTIONS_MARKER) {
            Ok(answer_questions(&text))
        } else if text.contains(NORMALIZE_MARKER) {
            answer_normalize(&text)
        } else {
            Err(ProviderError::Malformed(
                "mock chat does not recognize this prompt".into(),
            ))
        }
    }
}

/// Returns the lines of `section`, up to the next `## ` heading.
fn section<'a>(text: &'a str, heading: &str) -> Vec<&'a str> {
    let Some(start) = text.find(heading) else {
        return Vec::new();
    };
    text[start + heading.len()..]
        .lines()
        .skip(1) // remainder of the heading line itself
        .take_while(|l| !l.starts_with("## "))
        .collect()
}

fn listed_fields(text: &str) -> Vec<String> {
    section(text, SECTION_ENTITY_TYPES)
        .iter()
        .filter_map(|line| {
            let rest = line.strip_prefix("- ")?;
            rest.split_once(':')
                .map(|(name, _)| name.trim().to_string())
        })
        .collect()
}

fn answer_extraction(text: &str) -> String {
    let fields = listed_fields(text);
    let mut doc_lines = section(text, SECTION_DOCUMENT);
    doc_lines.extend(section(text, SECTION_STRUCTURED));
    // The output-format section quotes the tuple syntax; never scan it.
    let _ = SECTION_OUTPUT_FORMAT;

    let mut out = String::new();
    for line in doc_lines {
        let Some((label, value)) = line.split_once(':') else {
            continue;
        };
        let label = label.trim();
        let value = value.trim();
        if value.is_empty() {
            continue;
        }
        for field in &fields {
            let matches = label.eq_ignore_ascii_case(field)
                || label
                    .to_ascii_lowercase()
                    .ends_with(&format!("/{}", field.to_ascii_lowercase()));
            if matches {
                out.push_str(&format!("(\"entity\" | {field} | {value})\n"));
            }
        }
    }
    out
}

fn answer_postprocess(text: &str) -> String {
    let fields = listed_fields(text);
    let raw_lines = section(text, SECTION_RAW_ENTITIES);
    let _ = SECTION_RULES;

    let mut out = String::new();
    for field in &fields {
        let mut values: Vec<String> = Vec::new();
        for line in &raw_lines {
            let Some(inner) = line
                .trim()
                .strip_prefix('(')
                .and_then(|l| l.strip_suffix(')'))
            else {
                continue;
            };
            let parts: Vec<&str> = inner.splitn(3, '|').collect();
            if parts.len() == 3 && parts[1].trim().eq_ignore_ascii_case(field) {
                let value = parts[2].trim().to_string();
                if !value.is_empty() && !values.contains(&value) {
                    values.push(value);
                }
            }
        }
        let value = if values.is_empty() {
            NOT_AVAILABLE.to_string()
        } else {
            values.join("; ")
        };
        out.push_str(&format!("(\"entity\" | {field} | {value})\n"));
    }
    out
}

fn answer_claims(text: &str) -> String {
    let value = section(text, SECTION_TEXT).join(" ");
    let mut out = String::new();
    for part in value.split(['.', ';']) {
        let claim = part.trim();
        if !claim.is_empty() {
            out.push_str(&format!("- {claim}\n"));
        }
    }
    out
}

fn normalize_for_match(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer_verdicts(text: &str) -> String {
    let doc = normalize_for_match(&section(text, METRIC_SECTION_DOCUMENT).join("\n"));
    let mut out = String::new();
    for (i, line) in section(text, SECTION_CLAIMS).iter().enumerate() {
        let claim = line
            .trim()
            .trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ' ');
        if claim.is_empty() {
            continue;
        }
        let supported = doc.contains(&normalize_for_match(claim));
        let verdict = if supported {
            "supported"
        } else {
            "unsupported"
        };
        out.push_str(&format!("{}. {verdict}\n", i + 1));
    }
    out
}

fn answer_questions(text: &str) -> String {
    // "The text is the <field> of a dataset."
    let field = text
        .lines()
        .find_map(|l| {
            let l = l.trim();
            l.strip_prefix("Report one question per line, no numbering. The text is the ")
                .and_then(|rest| rest.strip_suffix(" of a dataset."))
        })
        .unwrap_or("value");
    let question = template_question(field);
    let mut out = String::new();
    for _ in 0..RELEVANCY_QUESTIONS {
        out.push_str(&question);
        out.push('\n');
    }
    out
}

fn answer_normalize(text: &str) -> Result<String, ProviderError> {
    let present = text
        .lines()
        .find_map(|l| {
            l.trim()
                .strip_prefix("Treat \"Present\", \"to date\" or \"ongoing\" as ")
                .and_then(|rest| rest.trim_end_matches('.').parse::<NaiveDate>().ok())
        })
        .ok_or_else(|| {
            ProviderError::Malformed("normalization prompt lacks a present date".into())
        })?;
    let raw = section(text, SECTION_COVERAGE).join(" ");
    canonicalize_date_text(&raw, present)
        .ok_or_else(|| ProviderError::Malformed(format!("no date mentions found in '{raw}'")))
}

/// One date mention with its start- and end-position interpretation: an exact
/// day is itself on both sides, a month-year spans the month, a bare year
/// spans the year, "Present" is the injected present date.
struct Mention {
    earliest: NaiveDate,
    latest: NaiveDate,
}

fn month_number(name: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "january",
        "february",
        "march",
        "april",
        "may",
        "june",
        "july",
        "august",
        "september",
        "october",
        "november",
        "december",
    ];
    MONTHS
        .iter()
        .position(|m| name.eq_ignore_ascii_case(m))
        .map(|i| i as u32 + 1)
}

fn last_day_of_month(year: i32, month: u32) -> Option<NaiveDate> {
    let (next_year, next_month) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    NaiveDate::from_ymd_opt(next_year, next_month, 1)?.pred_opt()
}

fn mask(masked: &mut String, start: usize, end: usize) {
    // All matched patterns are pure ASCII, so byte-range replacement is
    // char-boundary safe.
    masked.replace_range(start..end, &" ".repeat(end - start));
}

/// Heuristic free-form date-range reading used by the mock normalizer:
/// collects every date mention and spans the earliest start to the latest
/// end. Multiple listed periods therefore collapse to their spanning range.
pub fn canonicalize_date_text(raw: &str, present_date: NaiveDate) -> Option<String> {
    static ISO: OnceLock<Regex> = OnceLock::new();
    static MONTH: OnceLock<Regex> = OnceLock::new();
    static YEAR: OnceLock<Regex> = OnceLock::new();
    static PRESENT: OnceLock<Regex> = OnceLock::new();
    let iso = ISO.get_or_init(|| Regex::new(r"(\d{4})-(\d{2})-(\d{2})").unwrap());
    let month = MONTH.get_or_init(|| {
        Regex::new(
            r"(?i)\b(january|february|march|april|may|june|july|august|september|october|november|december)\s+(?:(\d{1,2})(?:st|nd|rd|th)?\s*,?\s+)?(\d{4})",
        )
        .unwrap()
    });
    let year = YEAR.get_or_init(|| Regex::new(r"\d{4}").unwrap());
    let present =
        PRESENT.get_or_init(|| Regex::new(r"(?i)\bpresent\b|\bto date\b|\bongoing\b").unwrap());

    let mut mentions: Vec<Mention> = Vec::new();
    let mut masked = raw.to_string();

    // Pass 1: exact ISO dates.
    let spans: Vec<(usize, usize, NaiveDate)> = iso
        .captures_iter(&masked)
        .filter_map(|c| {
            let m = c.get(0)?;
            let date = NaiveDate::from_ymd_opt(
                c[1].parse().ok()?,
                c[2].parse().ok()?,
                c[3].parse().ok()?,
            )?;
            Some((m.start(), m.end(), date))
        })
        .collect();
    for (start, end, date) in spans {
        mentions.push(Mention {
            earliest: date,
            latest: date,
        });
        mask(&mut masked, start, end);
    }

    // Pass 2: month-name dates, with or without a day.
    let spans: Vec<(usize, usize, Mention)> = month
        .captures_iter(&masked)
        .filter_map(|c| {
            let m = c.get(0)?;
            let month_num = month_number(&c[1])?;
            let year_num: i32 = c[3].parse().ok()?;
            let mention = match c.get(2) {
                Some(day) => {
                    let date =
                        NaiveDate::from_ymd_opt(year_num, month_num, day.as_str().parse().ok()?)?;
                    Mention {
                        earliest: date,
                        latest: date,
                    }
                }
                None => Mention {
                    earliest: NaiveDate::from_ymd_opt(year_num, month_num, 1)?,
                    latest: last_day_of_month(year_num, month_num)?,
                },
            };
            Some((m.start(), m.end(), mention))
        })
        .collect();
    for (start, end, mention) in spans {
        mentions.push(mention);
        mask(&mut masked, start, end);
    }

    // Pass 3: "Present"-like wordings.
    let spans: Vec<(usize, usize)> = present
        .find_iter(&masked)
        .map(|m| (m.start(), m.end()))
        .collect();
    for (start, end) in spans {
        mentions.push(Mention {
            earliest: present_date,
            latest: present_date,
        });
        mask(&mut masked, start, end);
    }

    // Pass 4: bare years, with manual digit-neighbour guards so fragments of
    // longer numbers are not misread as years.
    let bytes: Vec<u8> = masked.bytes().collect();
    for m in year.find_iter(&masked) {
        let before_ok = m.start() == 0 || !bytes[m.start() - 1].is_ascii_digit();
        let after_ok = m.end() == bytes.len() || !bytes[m.end()].is_ascii_digit();
        if !before_ok || !after_ok {
            continue;
        }
        let y: i32 = m.as_str().parse().ok()?;
        if !(1000..=2999).contains(&y) {
            continue;
        }
        mentions.push(Mention {
            earliest: NaiveDate::from_ymd_opt(y, 1, 1)?,
            latest: NaiveDate::from_ymd_opt(y, 12, 31)?,
        });
    }

    let earliest = mentions.iter().map(|m| m.earliest).min()?;
    let latest = mentions.iter().map(|m| m.latest).max()?;
    let (start, end) = if earliest <= latest {
        (earliest, latest)
    } else {
        (latest, earliest)
    };
    Some(format!(
        "{:04}-{:02}-{:02}-{:04}-{:02}-{:02}",
        start.year(),
        start.month(),
        start.day(),
        end.year(),
        end.month(),
        end.day()
    ))
}

/// Hash-derived deterministic embedder: whole text → seed → unit vector.
pub struct MockEmbedder {
    dim: usize,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder {
            dim: MOCK_EMBED_DIM,
        }
    }
}

impl EmbeddingModel for MockEmbedder {
    fn endpoint(&self) -> &str {
        "mock:"
    }

    fn embed(&self, _model: &str, text: &str) -> Result<Vec<f64>, ProviderError> {
        let digest = crate::sha256_hex(text.trim().as_bytes());
        let mut seed = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
        let mut values: Vec<f64> = (0..self.dim)
            .map(|_| {
                seed = splitmix64(seed);
                // Uniform in [-1, 1)
                (seed >> 11) as f64 / (1u64 << 52) as f64 - 1.0
            })
            .collect();
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut values {
            *v /= norm;
        }
        Ok(values)
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::EmbeddingVector;
    use crate::linking::cosine_similarity;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn present() -> NaiveDate {
        date(2025, 6, 7)
    }

    #[test]
    fn canonicalizes_iso_pairs() {
        assert_eq!(
            canonicalize_date_text("2010-12-08 to 2016-11-01", present()).unwrap(),
            "2010-12-08-2016-11-01"
        );
        assert_eq!(
            canonicalize_date_text(
                "2015-11-28T00:00:00Z\u{2013}2025-05-31T23:38:19Z",
                present()
            )
            .unwrap(),
            "2015-11-28-2025-05-31"
        );
        assert_eq!(
            canonicalize_date_text(
                "2000-01-01 00:00:00 UTC \u{2013} 2020-12-31 00:00:00 UTC",
                present()
            )
            .unwrap(),
            "2000-01-01-2020-12-31"
        );
    }

    #[test]
    fn canonicalizes_bare_years() {
        assert_eq!(
            canonicalize_date_text("2017", present()).unwrap(),
            "2017-01-01-2017-12-31"
        );
        assert_eq!(
            canonicalize_date_text("2021\u{2013}2023", present()).unwrap(),
            "2021-01-01-2023-12-31"
        );
    }

    #[test]
    fn multiple_periods_collapse_to_the_spanning_range() {
        assert_eq!(
            canonicalize_date_text(
                "1982-2005 (Measurements), 1983-2000 (Designation)",
                present()
            )
            .unwrap(),
            "1982-01-01-2005-12-31"
        );
    }

    #[test]
    fn canonicalizes_month_names_and_ordinals() {
        assert_eq!(
            canonicalize_date_text("August 13th 2021 - August 2023", present()).unwrap(),
            "2021-08-13-2023-08-31"
        );
        assert_eq!(
            canonicalize_date_text("January 1, 1800 - December 31, 2023", present()).unwrap(),
            "1800-01-01-2023-12-31"
        );
        assert_eq!(
            canonicalize_date_text("March 1, 2023 - March 31, 2023", present()).unwrap(),
            "2023-03-01-2023-03-31"
        );
        assert_eq!(
            canonicalize_date_text("August 14, 2021 - September 24, 2021", present()).unwrap(),
            "2021-08-14-2021-09-24"
        );
    }

    #[test]
    fn present_maps_to_the_injected_date() {
        assert_eq!(
            canonicalize_date_text("Present to 2050", present()).unwrap(),
            "2025-06-07-2050-12-31"
        );
        assert_eq!(
            canonicalize_date_text("2000-02-18 to Present", present()).unwrap(),
            "2000-02-18-2025-06-07"
        );
    }

    #[test]
    fn no_dates_is_none() {
        assert_eq!(canonicalize_date_text("no dates here", present()), None);
    }

    #[test]
    fn embedder_is_deterministic_and_unit_norm() {
        let e = MockEmbedder::default();
        let a = e.embed("m", "some text").unwrap();
        let b = e.embed("m", "some text").unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hundred_distinct_texts_do_not_collide() {
        let e = MockEmbedder::default();
        let vectors: Vec<EmbeddingVector> = (0..100)
            .map(|i| EmbeddingVector {
                values: e
                    .embed("m", &format!("dataset description number {i}"))
                    .unwrap(),
                model: "m".into(),
            })
            .collect();
        for i in 0..vectors.len() {
            for j in 0..i {
                let sim = cosine_similarity(&vectors[i], &vectors[j]).unwrap();
                assert!(sim < 0.999, "texts {i} and {j} nearly collide: {sim}");
            }
        }
    }
}
