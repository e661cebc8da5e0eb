//! Source-side metrics: exact phrase matching (EPM) and overall slot
//! filling (OSF).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::linearize::{extract_source_values, LinearFormat};
use crate::record::{MatchKey, Record, RecordError, RecordSet};
use crate::text::contains_folded;

/// Fraction of the source values of `x` that occur in `y`.
pub fn epm(x: &RecordSet, y: &str) -> f64 {
    let values = extract_source_values(x, &LinearFormat::default());
    if values.is_empty() {
        return 0.0;
    }
    let hits = values.iter().filter(|v| contains_folded(y, v, false)).count();
    hits as f64 / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OsfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Raw OSF counts: distinct matched records, distinct reconstructed
/// records, distinct input records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OsfCounts {
    pub matched: usize,
    pub reconstructed: usize,
    pub input: usize,
}

impl OsfCounts {
    pub fn score(&self) -> OsfScore {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.matched, self.reconstructed);
        let recall = ratio(self.matched, self.input);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        OsfScore { precision, recall, f1 }
    }
}

impl std::ops::AddAssign for OsfCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.matched += rhs.matched;
        self.reconstructed += rhs.reconstructed;
        self.input += rhs.input;
    }
}

fn key_set(records: &[Record], strict: bool) -> BTreeSet<MatchKey> {
    records.iter().map(|r| r.match_key(strict)).collect()
}

/// Counts records shared by the input and reconstructed knowledge bases,
/// both taken as sets under record equality. A missing reconstruction
/// counts as empty.
pub fn osf_counts(
    input: &RecordSet,
    reconstructed: Option<&RecordSet>,
    strict: bool,
) -> Result<OsfCounts, MetricError> {
    if let Some(rec) = reconstructed {
        if rec.kind() != input.kind() {
            return Err(RecordError::VariantMismatch {
                left: input.kind(),
                right: rec.kind(),
            }
            .into());
        }
    }
    let input_keys = key_set(input.records(), strict);
    let rec_keys = reconstructed.map(|r| key_set(r.records(), strict)).unwrap_or_default();
    Ok(OsfCounts {
        matched: rec_keys.intersection(&input_keys).count(),
        reconstructed: rec_keys.len(),
        input: input_keys.len(),
    })
}

pub fn osf(input: &RecordSet, reconstructed: Option<&RecordSet>) -> Result<OsfScore, MetricError> {
    Ok(osf_counts(input, reconstructed, false)?.score())
}
