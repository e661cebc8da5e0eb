//! METEOR in its original formulation: unigram alignment by exact match,
//! then by stem, no synonymy stage.
//!
//! `Fmean = 10PR / (R + 9P)`, `penalty = 0.5 · (chunks / matches)^3`,
//! `score = Fmean · (1 − penalty)`; the best reference wins.

use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use crate::text::tokenize;

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Porter-style English stem of a lowercase token.
pub fn stem(word: &str) -> String {
    stemmer().stem(word).into_owned()
}

/// Matches unaligned hypothesis tokens to unaligned reference tokens with
/// equal keys, left to right. Prefers the reference slot right after the
/// previous hypothesis token's slot so that chunks stay contiguous.
fn align_stage(hyp: &[String], reference: &[String], hyp_used: &mut [Option<usize>], ref_used: &mut [bool]) {
    for i in 0..hyp.len() {
        if hyp_used[i].is_some() {
            continue;
        }
        let candidates: Vec<usize> = (0..reference.len())
            .filter(|&j| !ref_used[j] && reference[j] == hyp[i])
            .collect();
        let preferred = i
            .checked_sub(1)
            .and_then(|p| hyp_used[p])
            .map(|j| j + 1)
            .filter(|j| candidates.contains(j));
        if let Some(j) = preferred.or_else(|| candidates.first().copied()) {
            hyp_used[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

fn score_pair(hyp: &[String], reference: &[String]) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut hyp_used = vec![None; hyp.len()];
    let mut ref_used = vec![false; reference.len()];
    align_stage(hyp, reference, &mut hyp_used, &mut ref_used);
    let hyp_stems: Vec<String> = hyp.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stem(w)).collect();
    align_stage(&hyp_stems, &ref_stems, &mut hyp_used, &mut ref_used);

    let alignment: Vec<(usize, usize)> = hyp_used
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let matches = alignment.len();
    if matches == 0 {
        return 0.0;
    }
    let chunks = 1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();

    let m = matches as f64;
    let precision = m / hyp.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    fmean * (1.0 - penalty)
}

/// Sentence-level METEOR against the best of `references`.
pub fn meteor(candidate: &str, references: &[String]) -> f64 {
    let hyp = tokenize(candidate);
    references
        .iter()
        .map(|r| score_pair(&hyp, &tokenize(r)))
        .fold(0.0, f64::max)
}

/// Mean sentence-level METEOR over a corpus.
pub fn meteor_corpus(candidates: &[String], references: &[Vec<String>]) -> Result<f64, super::MetricError> {
    super::check_aligned(candidates, references)?;
    let total: f64 = candidates.iter().zip(references).map(|(c, r)| meteor(c, r)).sum();
    Ok(total / candidates.len() as f64)
}
