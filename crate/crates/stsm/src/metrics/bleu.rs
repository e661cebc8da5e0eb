//! Corpus-level BLEU with clipped n-gram precisions and brevity penalty.

use std::collections::BTreeMap;

use super::{check_aligned, ngram_counts, MetricError};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuOptions {
    pub max_n: usize,
    /// Add-one smoothing of precisions for n ≥ 2. Off by default.
    pub smoothing: bool,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            max_n: 4,
            smoothing: false,
        }
    }
}

/// Sufficient statistics accumulated over a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    /// Modified n-gram precisions `p_1..p_N`.
    pub fn precisions(&self, smoothing: bool) -> Vec<f64> {
        self.matches
            .iter()
            .zip(&self.totals)
            .enumerate()
            .map(|(i, (&m, &t))| {
                if smoothing && i > 0 {
                    (m as f64 + 1.0) / (t as f64 + 1.0)
                } else if t == 0 {
                    0.0
                } else {
                    m as f64 / t as f64
                }
            })
            .collect()
    }

    pub fn brevity_penalty(&self) -> f64 {
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        if self.candidate_len == 0 {
            0.0
        } else if c < r {
            (1.0 - r / c).exp()
        } else {
            1.0
        }
    }

    pub fn score(&self, smoothing: bool) -> f64 {
        let precisions = self.precisions(smoothing);
        if precisions.contains(&0.0) {
            return 0.0;
        }
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        self.brevity_penalty() * log_mean.exp()
    }
}

pub fn bleu_stats(candidates: &[String], references: &[Vec<String>], max_n: usize) -> Result<BleuStats, MetricError> {
    check_aligned(candidates, references)?;
    let mut stats = BleuStats {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        candidate_len: 0,
        reference_len: 0,
    };
    for (cand, refs) in candidates.iter().zip(references) {
        let cand = tokenize(cand);
        let refs: Vec<Vec<String>> = refs.iter().map(|r| tokenize(r)).collect();
        stats.candidate_len += cand.len();
        // closest reference length, shorter one on ties
        stats.reference_len += refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&len| (len.abs_diff(cand.len()), len))
            .unwrap_or(0);
        for n in 1..=max_n {
            let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
            for r in &refs {
                for (gram, count) in ngram_counts(r, n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            let counts = ngram_counts(&cand, n);
            stats.totals[n - 1] += counts.values().sum::<usize>();
            stats.matches[n - 1] += counts
                .iter()
                .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }
    Ok(stats)
}

pub fn bleu(candidates: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    bleu_with(candidates, references, BleuOptions::default())
}

pub fn bleu_with(candidates: &[String], references: &[Vec<String>], opts: BleuOptions) -> Result<f64, MetricError> {
    Ok(bleu_stats(candidates, references, opts.max_n)?.score(opts.smoothing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn perfect_match_is_one() {
        let c = s(&["the cat sat on the mat", "a dog barked at the moon"]);
        let r: Vec<Vec<String>> = c.iter().map(|x| vec![x.clone()]).collect();
        assert!((bleu(&c, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let stats = bleu_stats(&s(&["the the the"]), &[s(&["the cat"])], 4).unwrap();
        assert_eq!(stats.matches[0], 1);
        assert_eq!(stats.totals[0], 3);
        assert!((stats.precisions(false)[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_four_gram_overlap_is_zero() {
        let c = s(&["a b c x d e f"]);
        let r = vec![s(&["a b c y d e f"])];
        let stats = bleu_stats(&c, &r, 4).unwrap();
        assert_eq!(stats.matches[3], 0);
        assert!(stats.matches[0] > 0);
        assert_eq!(bleu(&c, &r).unwrap(), 0.0);
        let smoothed = bleu_with(
            &c,
            &r,
            BleuOptions {
                smoothing: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(smoothed > 0.0 && smoothed < 1.0);
    }

    #[test]
    fn brevity_penalty_uses_closest_reference() {
        let stats = bleu_stats(&s(&["a b c"]), &[s(&["a b c d e f", "a b c d"])], 4).unwrap();
        assert_eq!(stats.reference_len, 4);
        assert!((stats.brevity_penalty() - (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn alignment_errors() {
        assert_eq!(
            bleu(&s(&["a"]), &[]).unwrap_err(),
            MetricError::Alignment {
                candidates: 1,
                references: 0
            }
        );
        assert_eq!(bleu(&s(&["a"]), &[vec![]]).unwrap_err(), MetricError::NoReferences(0));
    }

    #[test]
    fn appending_a_miss_never_raises_precisions() {
        let r = vec![s(&["the quick brown fox jumps"])];
        let before = bleu_stats(&s(&["the quick brown fox"]), &r, 4)
            .unwrap()
            .precisions(false);
        let after = bleu_stats(&s(&["the quick brown fox zebra"]), &r, 4)
            .unwrap()
            .precisions(false);
        for (b, a) in before.iter().zip(&after) {
            assert!(a <= b);
        }
    }
}
