//! ROUGE-L F1 over token sequences.
//!
//! Tokenizer: lowercase, split on runs of non-alphanumeric characters. The
//! choice is recorded in exported score tables so results stay comparable
//! across runs.

/// Tokenizer identifier written into score-table metadata.
pub const TOKENIZER_ID: &str = "lowercase-nonalnum-split";

/// Lowercases and splits on non-alphanumeric runs. Unicode-aware, so
/// accented words survive as single tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Longest-common-subsequence length over token slices, two-row dynamic
/// programming.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for item_a in a {
        for (j, item_b) in b.iter().enumerate() {
            curr[j + 1] = if item_a == item_b {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L F1: `2PR / (P + R)` with `P = LCS/|candidate|` and
/// `R = LCS/|reference|` over token sequences. Zero when either side
/// tokenizes to nothing.
pub fn rouge_l_f1(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / cand.len() as f64;
    let recall = lcs / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
