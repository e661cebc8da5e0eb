//! Translation edit rate with greedy block shifts.
//!
//! Repeatedly applies the block shift that most reduces the word-level
//! Levenshtein distance to the reference, as long as some shift strictly
//! reduces it. Each shift costs one edit. Only blocks (up to
//! [`MAX_SHIFT_LEN`] words) that occur verbatim in the reference are tried.

use super::{check_aligned, MetricError};
use crate::text::tokenize;

pub const MAX_SHIFT_LEN: usize = 10;

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

fn shifted<T: Clone>(words: &[T], start: usize, len: usize, dest: usize) -> Vec<T> {
    let mut rest: Vec<T> = Vec::with_capacity(words.len());
    rest.extend_from_slice(&words[..start]);
    rest.extend_from_slice(&words[start + len..]);
    let mut out = Vec::with_capacity(words.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&words[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

fn occurs_in<T: PartialEq>(block: &[T], reference: &[T]) -> bool {
    reference.windows(block.len()).any(|w| w == block)
}

/// `(shifts, edit distance after shifting)` for a token sequence.
pub fn ter_edits<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> (usize, usize) {
    let mut current = hyp.to_vec();
    let mut distance = levenshtein(&current, reference);
    let mut shifts = 0;
    loop {
        let mut best: Option<(usize, Vec<T>)> = None;
        for len in 1..=MAX_SHIFT_LEN.min(current.len()) {
            for start in 0..=current.len() - len {
                if !occurs_in(&current[start..start + len], reference) {
                    continue;
                }
                for dest in 0..=current.len() - len {
                    if dest == start {
                        continue;
                    }
                    let candidate = shifted(&current, start, len, dest);
                    let d = levenshtein(&candidate, reference);
                    if d < best.as_ref().map_or(distance, |(bd, _)| *bd) {
                        best = Some((d, candidate));
                    }
                }
            }
        }
        match best {
            Some((d, candidate)) => {
                current = candidate;
                distance = d;
                shifts += 1;
            }
            None => return (shifts, distance),
        }
    }
}

/// Sentence TER: minimum over references of `edits / reference words`.
pub fn ter(candidate: &str, references: &[String]) -> Result<f64, MetricError> {
    let hyp = tokenize(candidate);
    let mut best: Option<f64> = None;
    for r in references {
        let reference = tokenize(r);
        if reference.is_empty() {
            return Err(MetricError::EmptyReference);
        }
        let (shifts, distance) = ter_edits(&hyp, &reference);
        let score = (shifts + distance) as f64 / reference.len() as f64;
        best = Some(best.map_or(score, |b: f64| b.min(score)));
    }
    best.ok_or(MetricError::NoReferences(0))
}

/// Mean sentence TER over a corpus.
pub fn ter_corpus(candidates: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    check_aligned(candidates, references)?;
    let mut total = 0.0;
    for (c, r) in candidates.iter().zip(references) {
        total += ter(c, r)?;
    }
    Ok(total / candidates.len() as f64)
}
