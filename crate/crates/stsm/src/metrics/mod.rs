//! String-based evaluation metrics: BLEU, NIST, METEOR, ROUGE-L, CIDEr,
//! TER, EPM and OSF.
//!
//! All text metrics share [`crate::text::tokenize`], so scores never drift
//! apart because of tokenization. Scores are on a 0–1 scale except NIST
//! (unbounded, ≥ 0), CIDEr (0–10) and TER (≥ 0, lower is better).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::record::RecordError;

pub mod bleu;
pub mod cider;
pub mod meteor;
pub mod nist;
pub mod report;
pub mod rouge;
pub mod slot;
pub mod ter;

pub use bleu::{bleu, bleu_stats, BleuOptions, BleuStats};
pub use cider::cider;
pub use meteor::{meteor, meteor_corpus, stem};
pub use nist::nist;
pub use report::{EvalItem, MetricReport};
pub use rouge::{rouge_l, rouge_l_corpus, RougeOptions};
pub use slot::{epm, osf, OsfScore};
pub use ter::{ter, ter_corpus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("{candidates} candidates but {references} reference lists")]
    Alignment { candidates: usize, references: usize },
    #[error("item {0} has no references")]
    NoReferences(usize),
    #[error("empty reference: TER is undefined for a zero-length reference")]
    EmptyReference,
    #[error("CIDEr needs at least 2 corpus items for a meaningful idf, got {0}")]
    DegenerateIdf(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Record(#[from] RecordError),
}

pub(crate) fn check_aligned<T>(candidates: &[String], references: &[Vec<T>]) -> Result<(), MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::Alignment {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(MetricError::NoReferences(i));
    }
    Ok(())
}

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}
