//! Greedy target optimization.
//!
//! Walks the sentences of a generated target in order and, for each one,
//! the source values in source order. A sentence is kept the first time it
//! contributes a value that has not been matched yet. If every value ends
//! up matched, the kept sentences joined by single spaces become the
//! optimized target; otherwise the target is returned untouched.

use serde::{Deserialize, Serialize};

use crate::linearize::{extract_source_values, LinearFormat};
use crate::record::RecordSet;
use crate::text::{fold, normalize_text};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub optimized: String,
    pub changed: bool,
    pub matched_values: Vec<String>,
    pub kept_sentences: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OptimizeOptions {
    /// Disable case-folding when testing value containment.
    pub strict: bool,
}

/// Splits after `.`, `!` or `?` when followed by whitespace or the end of
/// the text. No abbreviation handling: `"Dr. Who"` splits after `"Dr."`.
pub fn split_sentences(t: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = t.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                push_fragment(&mut out, &t[start..end]);
                start = end;
            }
        }
    }
    push_fragment(&mut out, &t[start..]);
    out
}

fn push_fragment(out: &mut Vec<String>, fragment: &str) {
    let fragment = fragment.trim();
    if !fragment.is_empty() {
        out.push(fragment.to_string());
    }
}

pub fn optimize_target(x: &RecordSet, y_prime: &str, opts: OptimizeOptions) -> OptimizationOutcome {
    let values = extract_source_values(x, &LinearFormat::default());
    optimize_with_values(&values, y_prime, opts)
}

/// Same as [`optimize_target`] with an explicit value list.
pub fn optimize_with_values(values: &[String], y_prime: &str, opts: OptimizeOptions) -> OptimizationOutcome {
    let folded_values: Vec<String> = values.iter().map(|v| fold(v, opts.strict)).collect();
    let mut kept: Vec<String> = Vec::new();
    let mut matched: Vec<usize> = Vec::new();

    for sentence in split_sentences(y_prime) {
        let folded = fold(&sentence, opts.strict);
        for (vi, value) in folded_values.iter().enumerate() {
            if folded.contains(value.as_str()) && !matched.contains(&vi) {
                matched.push(vi);
                if !kept.contains(&sentence) {
                    kept.push(sentence.clone());
                }
            }
        }
    }

    let matched_values: Vec<String> = matched.iter().map(|&i| values[i].clone()).collect();
    if matched.len() == values.len() {
        let joined = kept.join(" ");
        if normalize_text(&joined) != normalize_text(y_prime) {
            return OptimizationOutcome {
                optimized: joined,
                changed: true,
                matched_values,
                kept_sentences: kept,
            };
        }
    }
    OptimizationOutcome {
        optimized: y_prime.to_string(),
        changed: false,
        matched_values,
        kept_sentences: kept,
    }
}
