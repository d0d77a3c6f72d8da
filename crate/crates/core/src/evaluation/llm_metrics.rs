//! LLM-judged metrics for free-form fields: faithfulness and response
//! relevancy.
//!
//! Faithfulness decomposes a value into atomic claims (one call), asks for a
//! supported/unsupported verdict per claim against the source document (one
//! call), and reports supported/total. Response relevancy generates `n = 3`
//! questions the value answers, embeds each plus the canonical field question
//! "What is the <field> of this dataset?", and reports the mean cosine
//! similarity. The judge gateway is the caller's choice and is recorded in
//! the score-table metadata.

use crate::gateway::{Gateway, GatewayError, Message};
use crate::linking::cosine_similarity;

pub(crate) const CLAIMS_MARKER: &str =
    "Break the text below into short, independent factual claims.";
pub(crate) const VERDICT_MARKER: &str =
    "For each numbered claim below, decide whether the document supports it.";
pub(crate) const QUESTIONS_MARKER: &str =
    "Generate exactly 3 questions that the text below directly answers.";

pub(crate) const SECTION_TEXT: &str = "## TEXT";
pub(crate) const SECTION_CLAIMS: &str = "## CLAIMS";
pub(crate) const SECTION_DOCUMENT: &str = "## DOCUMENT";

/// Number of generated questions for response relevancy.
pub const RELEVANCY_QUESTIONS: usize = 3;

/// Characters of document text shown to the verdict judge.
const JUDGE_DOCUMENT_CHARS: usize = 30_000;

/// The canonical question a relevant value should answer.
pub fn template_question(field_name: &str) -> String {
    format!("What is the {} of this dataset?", field_name.to_lowercase())
}

/// Fraction of the value's claims that the document supports.
///
/// A value with zero extractable claims is vacuously faithful and scores 1.0
/// with a warning.
pub fn faithfulness(gateway: &Gateway, value: &str, doc_text: &str) -> Result<f64, GatewayError> {
    let claims = extract_claims(gateway, value)?;
    if claims.is_empty() {
        tracing::warn!("no claims extracted; value is vacuously faithful");
        return Ok(1.0);
    }

    let mut user = String::new();
    user.push_str(VERDICT_MARKER);
    user.push_str(
        "\nAnswer one line per claim, in order, in the form \"<number>. supported\" or \
         \"<number>. unsupported\".\n\n",
    );
    user.push_str(SECTION_CLAIMS);
    user.push('\n');
    for (i, claim) in claims.iter().enumerate() {
        user.push_str(&format!("{}. {}\n", i + 1, claim));
    }
    user.push('\n');
    user.push_str(SECTION_DOCUMENT);
    user.push('\n');
    let excerpt: String = doc_text.chars().take(JUDGE_DOCUMENT_CHARS).collect();
    user.push_str(&excerpt);
    user.push('\n');

    let req = gateway.chat_request(vec![Message::user(user)]);
    let response = gateway.complete(&req)?;
    let verdicts = parse_verdicts(&response, claims.len())?;
    let supported = verdicts.iter().filter(|v| **v).count();
    Ok(supported as f64 / claims.len() as f64)
}

fn extract_claims(gateway: &Gateway, value: &str) -> Result<Vec<String>, GatewayError> {
    let mut user = String::new();
    user.push_str(CLAIMS_MARKER);
    user.push_str("\nReport one claim per line, prefixed with \"- \". No other output.\n\n");
    user.push_str(SECTION_TEXT);
    user.push('\n');
    user.push_str(value);
    user.push('\n');
    let req = gateway.chat_request(vec![Message::user(user)]);
    let response = gateway.complete(&req)?;
    Ok(response
        .lines()
        .filter_map(|l| {
            let l = l.trim();
            l.strip_prefix("- ").or(Some(l)).map(str::trim)
        })
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn parse_verdicts(response: &str, expected: usize) -> Result<Vec<bool>, GatewayError> {
    let mut verdicts = Vec::new();
    for line in response.lines() {
        let lower = line.trim().to_lowercase();
        if lower.is_empty() {
            continue;
        }
        if lower.contains("unsupported") {
            verdicts.push(false);
        } else if lower.contains("supported") {
            verdicts.push(true);
        }
    }
    if verdicts.len() != expected {
        return Err(GatewayError::MalformedResponse(format!(
            "expected {expected} verdicts, judge returned {}",
            verdicts.len()
        )));
    }
    Ok(verdicts)
}

/// Mean cosine similarity between the questions generated from the value and
/// the canonical field question.
pub fn response_relevancy(
    gateway: &Gateway,
    value: &str,
    field_name: &str,
) -> Result<f64, GatewayError> {
    let mut user = String::new();
    user.push_str(QUESTIONS_MARKER);
    user.push_str(&format!(
        "\nReport one question per line, no numbering. The text is the {} of a dataset.\n\n",
        field_name.to_lowercase()
    ));
    user.push_str(SECTION_TEXT);
    user.push('\n');
    user.push_str(value);
    user.push('\n');

    let req = gateway.chat_request(vec![Message::user(user)]);
    let response = gateway.complete(&req)?;
    let questions: Vec<String> = response
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .take(RELEVANCY_QUESTIONS)
        .map(str::to_string)
        .collect();
    if questions.is_empty() {
        return Err(GatewayError::MalformedResponse(
            "question generation returned no questions".into(),
        ));
    }

    let template = gateway.embed(&template_question(field_name))?;
    let mut total = 0.0;
    for q in &questions {
        let qv = gateway.embed(q)?;
        let sim = cosine_similarity(&qv, &template)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        total += sim;
    }
    Ok(total / questions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::scripted::{ScriptedChat, ScriptedEmbedder};
    use crate::gateway::GatewayConfig;

    fn gateway(chat: ScriptedChat, embedder: ScriptedEmbedder) -> Gateway {
        Gateway::new(
            Box::new(chat),
            Box::new(embedder),
            GatewayConfig {
                backoff_ms: 0,
                ..GatewayConfig::default()
            },
            None,
        )
    }

    #[test]
    fn all_claims_supported_scores_one() {
        let chat = ScriptedChat::new()
            .on(CLAIMS_MARKER, "- claim one\n- claim two")
            .on(VERDICT_MARKER, "1. supported\n2. supported");
        let gw = gateway(chat, ScriptedEmbedder::default());
        assert_eq!(faithfulness(&gw, "value", "doc").unwrap(), 1.0);
    }

    #[test]
    fn one_of_two_supported_scores_half() {
        let chat = ScriptedChat::new()
            .on(CLAIMS_MARKER, "- claim one\n- claim two")
            .on(VERDICT_MARKER, "1. supported\n2. unsupported");
        let gw = gateway(chat, ScriptedEmbedder::default());
        assert_eq!(faithfulness(&gw, "value", "doc").unwrap(), 0.5);
    }

    #[test]
    fn zero_claims_is_vacuously_faithful() {
        let chat = ScriptedChat::new().on(CLAIMS_MARKER, "\n");
        let gw = gateway(chat, ScriptedEmbedder::default());
        assert_eq!(faithfulness(&gw, "", "doc").unwrap(), 1.0);
    }

    #[test]
    fn verdict_count_mismatch_is_an_error() {
        let chat = ScriptedChat::new()
            .on(CLAIMS_MARKER, "- one\n- two")
            .on(VERDICT_MARKER, "1. supported");
        let gw = gateway(chat, ScriptedEmbedder::default());
        assert!(faithfulness(&gw, "v", "doc").is_err());
    }

    #[test]
    fn relevancy_one_when_template_generated() {
        let template = template_question("Description");
        let chat = ScriptedChat::new().on(
            QUESTIONS_MARKER,
            format!("{template}\n{template}\n{template}"),
        );
        let embedder = ScriptedEmbedder::default().on(template.clone(), vec![1.0, 0.0]);
        let gw = gateway(chat, embedder);
        let score = response_relevancy(&gw, "some description", "Description").unwrap();
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relevancy_zero_for_orthogonal_questions() {
        let template = template_question("Keywords");
        let chat = ScriptedChat::new().on(QUESTIONS_MARKER, "q1\nq2\nq3");
        let embedder = ScriptedEmbedder::default()
            .on(template, vec![1.0, 0.0])
            .on("q1", vec![0.0, 1.0])
            .on("q2", vec![0.0, 1.0])
            .on("q3", vec![0.0, 1.0]);
        let gw = gateway(chat, embedder);
        let score = response_relevancy(&gw, "v", "Keywords").unwrap();
        assert!(score.abs() < 1e-12);
    }

    #[test]
    fn relevancy_averages_mixed_similarities() {
        // cosines 1.0, 0.5, 0.0 against the template → mean 0.5
        let template = template_question("Description");
        let half = 3.0_f64.sqrt() / 2.0;
        let chat = ScriptedChat::new().on(QUESTIONS_MARKER, "qa\nqb\nqc");
        let embedder = ScriptedEmbedder::default()
            .on(template, vec![1.0, 0.0])
            .on("qa", vec![1.0, 0.0])
            .on("qb", vec![0.5, half])
            .on("qc", vec![0.0, 1.0]);
        let gw = gateway(chat, embedder);
        let score = response_relevancy(&gw, "v", "Description").unwrap();
        assert!((score - 0.5).abs() < 1e-12, "{score}");
    }
}
