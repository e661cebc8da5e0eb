//! ROUGE-L: longest-common-subsequence F-measure weighted towards recall.

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeOptions {
    /// β² in `F = (1 + β²) P R / (R + β² P)`.
    pub beta_sq: f64,
}

impl Default for RougeOptions {
    fn default() -> Self {
        RougeOptions { beta_sq: 1.2 }
    }
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(curr[j]) };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// `(precision, recall)` of the LCS between candidate and one reference.
pub fn lcs_precision_recall(candidate: &str, reference: &str) -> (f64, f64) {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    let lcs = lcs_len(&c, &r) as f64;
    let p = if c.is_empty() { 0.0 } else { lcs / c.len() as f64 };
    let rec = if r.is_empty() { 0.0 } else { lcs / r.len() as f64 };
    (p, rec)
}

fn f_measure(p: f64, r: f64, beta_sq: f64) -> f64 {
    if p == 0.0 || r == 0.0 {
        0.0
    } else {
        (1.0 + beta_sq) * p * r / (r + beta_sq * p)
    }
}

pub fn rouge_l(candidate: &str, references: &[String]) -> f64 {
    rouge_l_with(candidate, references, RougeOptions::default())
}

pub fn rouge_l_with(candidate: &str, references: &[String], opts: RougeOptions) -> f64 {
    references
        .iter()
        .map(|r| {
            let (p, rec) = lcs_precision_recall(candidate, r);
            f_measure(p, rec, opts.beta_sq)
        })
        .fold(0.0, f64::max)
}

pub fn rouge_l_corpus(candidates: &[String], references: &[Vec<String>]) -> Result<f64, super::MetricError> {
    super::check_aligned(candidates, references)?;
    let total: f64 = candidates.iter().zip(references).map(|(c, r)| rouge_l(c, r)).sum();
    Ok(total / candidates.len() as f64)
}
