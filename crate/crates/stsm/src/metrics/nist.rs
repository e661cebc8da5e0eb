//! NIST: information-weighted n-gram co-occurrence (n = 1..5).
//!
//! The information weight of an n-gram `w1..wn` is
//! `log2(count(w1..wn-1) / count(w1..wn))` over all reference n-grams in
//! the corpus, where the count of the empty prefix is the total number of
//! reference words.

use std::collections::BTreeMap;

use super::{check_aligned, ngram_counts, MetricError};
use crate::text::tokenize;

pub const NIST_MAX_N: usize = 5;

pub fn nist(candidates: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    check_aligned(candidates, references)?;
    let cands: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(c)).collect();
    let refs: Vec<Vec<Vec<String>>> = references
        .iter()
        .map(|rs| rs.iter().map(|r| tokenize(r)).collect())
        .collect();

    // corpus-wide reference n-gram counts, n = 1..=MAX
    let mut ref_counts: BTreeMap<&[String], usize> = BTreeMap::new();
    let mut total_ref_words = 0usize;
    for rs in &refs {
        for r in rs {
            total_ref_words += r.len();
            for n in 1..=NIST_MAX_N {
                for (gram, c) in ngram_counts(r, n) {
                    *ref_counts.entry(gram).or_insert(0) += c;
                }
            }
        }
    }
    let info = |gram: &[String]| -> f64 {
        let count = ref_counts.get(gram).copied().unwrap_or(0);
        if count == 0 {
            return 0.0;
        }
        let prefix = if gram.len() == 1 {
            total_ref_words
        } else {
            ref_counts.get(&gram[..gram.len() - 1]).copied().unwrap_or(0)
        };
        (prefix as f64 / count as f64).log2()
    };

    let mut info_sum = [0.0f64; NIST_MAX_N];
    let mut totals = [0usize; NIST_MAX_N];
    let mut sys_len = 0usize;
    let mut ref_len = 0.0f64;
    for (cand, rs) in cands.iter().zip(&refs) {
        sys_len += cand.len();
        ref_len += rs.iter().map(Vec::len).sum::<usize>() as f64 / rs.len() as f64;
        for n in 1..=NIST_MAX_N {
            let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
            for r in rs {
                for (gram, c) in ngram_counts(r, n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(c);
                }
            }
            for (gram, c) in ngram_counts(cand, n) {
                totals[n - 1] += c;
                let matched = c.min(max_ref.get(gram).copied().unwrap_or(0));
                if matched > 0 {
                    info_sum[n - 1] += matched as f64 * info(gram);
                }
            }
        }
    }

    let score: f64 = info_sum
        .iter()
        .zip(&totals)
        .filter(|(_, &t)| t > 0)
        .map(|(s, &t)| s / t as f64)
        .sum();
    Ok(score * brevity_factor(sys_len as f64, ref_len))
}

/// `exp(β · ln²(min(1, sys/ref)))` with β chosen so that a length ratio of
/// 2/3 yields a factor of 0.5.
fn brevity_factor(sys_len: f64, ref_len: f64) -> f64 {
    if ref_len <= 0.0 {
        return 1.0;
    }
    let ratio = sys_len / ref_len;
    if ratio >= 1.0 {
        return 1.0;
    }
    if ratio <= 0.0 {
        return 0.0;
    }
    let beta = 0.5f64.ln() / 1.5f64.ln().powi(2);
    (beta * ratio.ln().powi(2)).exp()
}
