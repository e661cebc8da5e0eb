//! Elite-pair filtering, training-subset assembly and per-epoch data
//! allocation.
//!
//! A tuple `(x, y, y′, x′, y″, x″)` is judged under one of two cases:
//!
//! * **Case 1** (`y″ == y′`): keep `(x, y′)` if `y′` is shorter than `y`,
//!   mentions every source value of `x`, and every record of `x′` is a
//!   record of `x`.
//! * **Case 2** (`y″ != y′`): the same three conditions on `(x, y″, x″)`.
//!
//! The record-subset condition is OSF-precision of the reconstruction
//! against `x` being exactly 1.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearize::{extract_source_values, LinearFormat};
use crate::metrics::slot::osf_counts;
use crate::record::{record_eq, Example, Origin, Pair, RecordSet, SelfMemTuple};
use crate::seed::rng_for;
use crate::text::{contains_folded, fold, normalize_text, tokenize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("no pairs available: elite, remaining and reserve sets are all empty")]
    EmptySubset,
    #[error("{tuples} tuples and {verdicts} verdicts for {gold} gold examples")]
    Misaligned {
        gold: usize,
        tuples: usize,
        verdicts: usize,
    },
    #[error("target size must be at least 1")]
    ZeroTarget,
    #[error("infeasible allocation: {0}")]
    Allocation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    Case1,
    Case2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    /// 1a / 2a
    LenNotShorter,
    /// 1b / 2b
    MissingSourceValue,
    /// 1c / 2c
    NotSubsetOfSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionVerdict {
    pub accepted: bool,
    pub case_id: CaseId,
    pub failed_conditions: Vec<Condition>,
}

impl SelectionVerdict {
    /// The origin tag of the pair this verdict selects, if any.
    pub fn origin(&self) -> Option<Origin> {
        match (self.accepted, self.case_id) {
            (true, CaseId::Case1) => Some(Origin::SelfMemoryYPrime),
            (true, CaseId::Case2) => Some(Origin::SelfMemoryYDoublePrime),
            _ => None,
        }
    }
}

/// How "length" is measured for conditions 1a/2a.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    #[default]
    Chars,
    Tokens,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub length: LengthMode,
    /// Disable case-folding for value and record matching.
    pub strict: bool,
}

fn text_len(t: &str, mode: LengthMode) -> usize {
    match mode {
        LengthMode::Chars => normalize_text(t).chars().count(),
        LengthMode::Tokens => tokenize(t).len(),
    }
}

/// The candidate target and reconstruction a tuple is judged on.
fn candidate(t: &SelfMemTuple) -> (CaseId, &str, Option<&RecordSet>) {
    match (&t.y_prime, &t.y_dprime) {
        (None, _) => (CaseId::None, "", None),
        (Some(yp), Some(ydp)) if ydp != yp => (CaseId::Case2, ydp.as_str(), t.x_dprime.as_ref()),
        (Some(yp), _) => (CaseId::Case1, yp.as_str(), t.x_prime.as_ref()),
    }
}

/// Judges one tuple. A missing `y′` is judged as an empty target, which
/// always fails the source-value condition.
pub fn judge_pair(t: &SelfMemTuple, opts: SelectionOptions) -> SelectionVerdict {
    let (case_id, target, reconstruction) = candidate(t);
    let mut failed = Vec::new();

    if text_len(target, opts.length) >= text_len(&t.y, opts.length) {
        failed.push(Condition::LenNotShorter);
    }
    let values = extract_source_values(&t.x, &LinearFormat::default());
    if !values.iter().all(|v| contains_folded(target, v, opts.strict)) {
        failed.push(Condition::MissingSourceValue);
    }
    let subset = match osf_counts(&t.x, reconstruction, opts.strict) {
        Ok(c) => c.reconstructed > 0 && c.matched == c.reconstructed,
        Err(_) => false,
    };
    if !subset {
        failed.push(Condition::NotSubsetOfSource);
    }

    SelectionVerdict {
        accepted: failed.is_empty() && case_id != CaseId::None,
        case_id,
        failed_conditions: failed,
    }
}

/// Re-checks a verdict from scratch without going through the judging
/// code path. Returns `true` when every accepted verdict still satisfies
/// all three conditions and every rejection names only conditions that
/// really fail.
pub fn audit(t: &SelfMemTuple, verdict: &SelectionVerdict, opts: SelectionOptions) -> bool {
    // without y′ there is no candidate, whatever else the tuple holds
    let (target, reconstruction): (&str, Option<&RecordSet>) = match (&t.y_prime, verdict.case_id) {
        (None, _) => ("", None),
        (Some(_), CaseId::Case2) => (t.y_dprime.as_deref().unwrap_or(""), t.x_dprime.as_ref()),
        (Some(yp), _) => (yp.as_str(), t.x_prime.as_ref()),
    };

    let shorter = match opts.length {
        LengthMode::Chars => normalize_text(target).chars().count() < normalize_text(&t.y).chars().count(),
        LengthMode::Tokens => tokenize(target).len() < tokenize(&t.y).len(),
    };
    let folded_target = fold(target, opts.strict);
    let covered = extract_source_values(&t.x, &LinearFormat::default())
        .iter()
        .all(|v| folded_target.contains(&fold(v, opts.strict)));
    let subset = match reconstruction {
        None => false,
        Some(rec) => {
            !rec.is_empty()
                && rec.records().iter().all(|r| {
                    t.x.records()
                        .iter()
                        .any(|s| record_eq(r, s, opts.strict).unwrap_or(false))
                })
        }
    };

    let truth = [
        (Condition::LenNotShorter, !shorter),
        (Condition::MissingSourceValue, !covered),
        (Condition::NotSubsetOfSource, !subset),
    ];
    if verdict.accepted {
        return shorter && covered && subset && verdict.failed_conditions.is_empty();
    }
    !verdict.failed_conditions.is_empty()
        && verdict
            .failed_conditions
            .iter()
            .all(|c| truth.iter().any(|(tc, violated)| tc == c && *violated))
}

/// Tallies of judged tuples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub judged: usize,
    pub accepted_case1: usize,
    pub accepted_case2: usize,
    pub rejected: usize,
    pub failed_len_not_shorter: usize,
    pub failed_missing_source_value: usize,
    pub failed_not_subset_of_source: usize,
}

impl SelectionStats {
    pub fn from_verdicts(verdicts: &[SelectionVerdict]) -> Self {
        let mut s = SelectionStats::default();
        for v in verdicts {
            s.add(v);
        }
        s
    }

    pub fn add(&mut self, v: &SelectionVerdict) {
        self.judged += 1;
        match (v.accepted, v.case_id) {
            (true, CaseId::Case1) => self.accepted_case1 += 1,
            (true, CaseId::Case2) => self.accepted_case2 += 1,
            _ => self.rejected += 1,
        }
        for c in &v.failed_conditions {
            match c {
                Condition::LenNotShorter => self.failed_len_not_shorter += 1,
                Condition::MissingSourceValue => self.failed_missing_source_value += 1,
                Condition::NotSubsetOfSource => self.failed_not_subset_of_source += 1,
            }
        }
    }

    pub fn merge(&mut self, other: &SelectionStats) {
        self.judged += other.judged;
        self.accepted_case1 += other.accepted_case1;
        self.accepted_case2 += other.accepted_case2;
        self.rejected += other.rejected;
        self.failed_len_not_shorter += other.failed_len_not_shorter;
        self.failed_missing_source_value += other.failed_missing_source_value;
        self.failed_not_subset_of_source += other.failed_not_subset_of_source;
    }
}

/// Which judged pairs feed the new subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    /// Elite pairs plus the gold pairs of rejected tuples.
    EliteAndRemaining,
    /// Elite pairs only; shortfalls come from the reserve.
    EliteOnly,
}

/// Assembles the self-training subset for one epoch.
///
/// Each gold example contributes its elite pair when accepted, or (under
/// [`Mix::EliteAndRemaining`]) its gold pair tagged `Remaining`. The union
/// is deduplicated on `(source_text, target_text)`, down-sampled with the
/// seed when it is larger than `target_size`, and topped up from a seeded
/// shuffle of `reserve` when smaller.
pub fn build_subset(
    gold: &[Example],
    tuples: &[SelfMemTuple],
    verdicts: &[SelectionVerdict],
    target_size: usize,
    seed: u64,
    reserve: &[Example],
    mix: Mix,
) -> Result<Vec<Pair>, SelectionError> {
    if tuples.len() != gold.len() || verdicts.len() != gold.len() {
        return Err(SelectionError::Misaligned {
            gold: gold.len(),
            tuples: tuples.len(),
            verdicts: verdicts.len(),
        });
    }
    if target_size == 0 {
        return Err(SelectionError::ZeroTarget);
    }

    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut union: Vec<Pair> = Vec::new();
    let mut push = |pair: Pair, union: &mut Vec<Pair>| {
        if seen.insert((pair.source_text.clone(), pair.target_text.clone())) {
            union.push(pair);
        }
    };

    for ((ex, t), v) in gold.iter().zip(tuples).zip(verdicts) {
        let pair = match v.origin() {
            Some(Origin::SelfMemoryYPrime) => t
                .y_prime
                .as_ref()
                .map(|y| Pair::new(&ex.source_text, y, Origin::SelfMemoryYPrime)),
            Some(Origin::SelfMemoryYDoublePrime) => t
                .y_dprime
                .as_ref()
                .map(|y| Pair::new(&ex.source_text, y, Origin::SelfMemoryYDoublePrime)),
            _ if mix == Mix::EliteAndRemaining => Some(Pair::new(&ex.source_text, &ex.target, Origin::Remaining)),
            _ => None,
        };
        if let Some(p) = pair {
            push(p, &mut union);
        }
    }

    if union.len() > target_size {
        let mut rng = rng_for(seed, "subset-sampling", 0);
        let mut picked = index::sample(&mut rng, union.len(), target_size).into_vec();
        picked.sort_unstable();
        union = picked.into_iter().map(|i| union[i].clone()).collect();
    } else if union.len() < target_size {
        let mut order: Vec<usize> = (0..reserve.len()).collect();
        order.shuffle(&mut rng_for(seed, "subset-top-up", 0));
        for i in order {
            if union.len() >= target_size {
                break;
            }
            let ex = &reserve[i];
            push(Pair::new(&ex.source_text, &ex.target, Origin::Gold), &mut union);
        }
    }

    if union.is_empty() {
        return Err(SelectionError::EmptySubset);
    }
    Ok(union)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationStrategy {
    /// Consecutive disjoint blocks of one seeded shuffle, one per epoch.
    FixedNonOverlap,
    /// The first block, every epoch.
    FixedRepeated,
    /// An independent seeded sample per epoch.
    RandomPerEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPlan {
    pub epoch_indices: Vec<Vec<usize>>,
    pub strategy: AllocationStrategy,
    pub ratio: f64,
    pub seed: u64,
    pub n_examples: usize,
}

impl SubsetPlan {
    pub fn block_size(&self) -> usize {
        self.epoch_indices.first().map_or(0, Vec::len)
    }

    /// Indices never drawn by any epoch.
    pub fn unused(&self) -> Vec<usize> {
        let used: HashSet<usize> = self.epoch_indices.iter().flatten().copied().collect();
        (0..self.n_examples).filter(|i| !used.contains(i)).collect()
    }

    /// Indices available for topping up `epoch`'s subset: those no epoch
    /// uses for fixed strategies, those outside this epoch's sample for
    /// random allocation.
    pub fn reserve(&self, epoch: usize) -> Vec<usize> {
        match self.strategy {
            AllocationStrategy::RandomPerEpoch => {
                let current: HashSet<usize> = self.epoch_indices[epoch].iter().copied().collect();
                (0..self.n_examples).filter(|i| !current.contains(i)).collect()
            }
            _ => self.unused(),
        }
    }
}

/// `floor(ratio · n)`, tolerant of binary rounding (0.3 · 10 is 3).
pub fn block_size(n_examples: usize, ratio: f64) -> usize {
    (ratio * n_examples as f64 + 1e-9).floor() as usize
}

pub fn allocate(
    n_examples: usize,
    strategy: AllocationStrategy,
    ratio: f64,
    epochs: usize,
    seed: u64,
) -> Result<SubsetPlan, SelectionError> {
    let bad = |msg: String| Err(SelectionError::Allocation(msg));
    if !(ratio > 0.0 && ratio <= 1.0) {
        return bad(format!("ratio {ratio} outside (0, 1]"));
    }
    if epochs == 0 {
        return bad("zero epochs".into());
    }
    if n_examples < epochs {
        return bad(format!("{n_examples} examples cannot cover {epochs} epochs"));
    }
    let block = block_size(n_examples, ratio);
    if block == 0 {
        return bad(format!("ratio {ratio} of {n_examples} examples is an empty subset"));
    }
    if strategy == AllocationStrategy::FixedNonOverlap
        && (ratio * epochs as f64 > 1.0 + 1e-9 || block * epochs > n_examples)
    {
        return bad(format!("{epochs} disjoint blocks of ratio {ratio} exceed the dataset"));
    }

    let epoch_indices = match strategy {
        AllocationStrategy::FixedNonOverlap | AllocationStrategy::FixedRepeated => {
            let mut order: Vec<usize> = (0..n_examples).collect();
            order.shuffle(&mut rng_for(seed, "allocation", 0));
            (0..epochs)
                .map(|e| {
                    let b = if strategy == AllocationStrategy::FixedRepeated {
                        0
                    } else {
                        e
                    };
                    order[b * block..(b + 1) * block].to_vec()
                })
                .collect()
        }
        AllocationStrategy::RandomPerEpoch => (0..epochs)
            .map(|e| {
                let mut rng = rng_for(seed, "allocation", e as u64);
                index::sample(&mut rng, n_examples, block).into_vec()
            })
            .collect(),
    };

    Ok(SubsetPlan {
        epoch_indices,
        strategy,
        ratio,
        seed,
        n_examples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Record, RecordKind};

    fn rs(ts: &[(&str, &str, &str)]) -> RecordSet {
        RecordSet::new(
            RecordKind::Tripleset,
            ts.iter().map(|(s, p, o)| Record::triple(s, p, o).unwrap()).collect(),
        )
        .unwrap()
    }

    fn tuple(y: &str, yp: &str, xp: RecordSet, ydp: &str, xdp: Option<RecordSet>) -> SelfMemTuple {
        SelfMemTuple {
            x: rs(&[("A", "P", "B")]),
            y: y.into(),
            y_prime: Some(yp.into()),
            x_prime: Some(xp),
            y_dprime: Some(ydp.into()),
            x_dprime: xdp,
        }
    }

    #[test]
    fn case1_accept() {
        let t = tuple(
            "A is related to B somehow.",
            "A P B.",
            rs(&[("A", "P", "B")]),
            "A P B.",
            None,
        );
        let v = judge_pair(&t, SelectionOptions::default());
        assert_eq!(
            v,
            SelectionVerdict {
                accepted: true,
                case_id: CaseId::Case1,
                failed_conditions: vec![]
            }
        );
        assert_eq!(v.origin(), Some(Origin::SelfMemoryYPrime));
        assert!(audit(&t, &v, SelectionOptions::default()));
    }

    #[test]
    fn case1_reject_not_subset() {
        let t = tuple(
            "A is related to B somehow.",
            "A P B.",
            rs(&[("A", "P", "C")]),
            "A P B.",
            None,
        );
        let v = judge_pair(&t, SelectionOptions::default());
        assert!(!v.accepted);
        assert_eq!(v.failed_conditions, vec![Condition::NotSubsetOfSource]);
        assert!(audit(&t, &v, SelectionOptions::default()));
    }

    #[test]
    fn case1_reject_longer() {
        let t = tuple(
            "A P B.",
            "A is related to B somehow.",
            rs(&[("A", "P", "B")]),
            "A is related to B somehow.",
            None,
        );
        let v = judge_pair(&t, SelectionOptions::default());
        assert_eq!(v.failed_conditions, vec![Condition::LenNotShorter]);
    }

    #[test]
    fn case2_uses_double_prime() {
        let t = tuple(
            "A is related to B in some long way.",
            "A p B. Nothing else.",
            rs(&[("X", "Y", "Z")]),
            "A p B.",
            Some(rs(&[("A", "P", "B")])),
        );
        let v = judge_pair(&t, SelectionOptions::default());
        assert_eq!(v.case_id, CaseId::Case2);
        assert!(v.accepted);
        assert_eq!(v.origin(), Some(Origin::SelfMemoryYDoublePrime));

        let mut missing = t.clone();
        missing.x_dprime = None;
        let v = judge_pair(&missing, SelectionOptions::default());
        assert_eq!(v.failed_conditions, vec![Condition::NotSubsetOfSource]);
    }

    #[test]
    fn missing_output_is_rejected_with_reasons() {
        let mut t = tuple("A p B.", "x", rs(&[("A", "P", "B")]), "x", None);
        t.y_prime = None;
        t.x_prime = None;
        t.y_dprime = None;
        let v = judge_pair(&t, SelectionOptions::default());
        assert!(!v.accepted);
        assert_eq!(v.case_id, CaseId::None);
        assert_eq!(
            v.failed_conditions,
            vec![Condition::MissingSourceValue, Condition::NotSubsetOfSource]
        );
        assert!(audit(&t, &v, SelectionOptions::default()));
    }

    #[test]
    fn token_length_mode() {
        // 4 tokens vs 4 tokens: not shorter by token count, shorter by chars
        let x = tuple("Aaaa p Bbbb .", "A p B.", rs(&[("A", "P", "B")]), "A p B.", None);
        let chars = judge_pair(&x, SelectionOptions::default());
        assert!(!chars.failed_conditions.contains(&Condition::LenNotShorter));
        let tokens = judge_pair(
            &x,
            SelectionOptions {
                length: LengthMode::Tokens,
                strict: false,
            },
        );
        assert!(tokens.failed_conditions.contains(&Condition::LenNotShorter));
    }

    #[test]
    fn audit_catches_bogus_verdicts() {
        let t = tuple(
            "A is related to B somehow.",
            "A P B.",
            rs(&[("A", "P", "C")]),
            "A P B.",
            None,
        );
        let forged = SelectionVerdict {
            accepted: true,
            case_id: CaseId::Case1,
            failed_conditions: vec![],
        };
        assert!(!audit(&t, &forged, SelectionOptions::default()));
        let wrong_reason = SelectionVerdict {
            accepted: false,
            case_id: CaseId::Case1,
            failed_conditions: vec![Condition::LenNotShorter],
        };
        assert!(!audit(&t, &wrong_reason, SelectionOptions::default()));
    }

    #[test]
    fn allocation_examples() {
        let plan = allocate(10, AllocationStrategy::FixedNonOverlap, 0.3, 3, 7).unwrap();
        assert!(plan.epoch_indices.iter().all(|b| b.len() == 3));
        let all: HashSet<usize> = plan.epoch_indices.iter().flatten().copied().collect();
        assert_eq!(all.len(), 9);
        assert_eq!(plan.unused().len(), 1);

        let plan = allocate(10, AllocationStrategy::FixedRepeated, 0.3, 3, 7).unwrap();
        assert_eq!(plan.epoch_indices[0], plan.epoch_indices[1]);
        assert_eq!(plan.epoch_indices[1], plan.epoch_indices[2]);

        for strategy in [
            AllocationStrategy::FixedNonOverlap,
            AllocationStrategy::FixedRepeated,
            AllocationStrategy::RandomPerEpoch,
        ] {
            let plan = allocate(10, strategy, 1.0, 1, 7).unwrap();
            let mut idx = plan.epoch_indices[0].clone();
            idx.sort_unstable();
            assert_eq!(idx, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn random_allocation_is_distinct_within_epochs() {
        let plan = allocate(50, AllocationStrategy::RandomPerEpoch, 0.3, 5, 1).unwrap();
        for e in &plan.epoch_indices {
            let set: HashSet<_> = e.iter().collect();
            assert_eq!(set.len(), 15);
        }
        assert_ne!(plan.epoch_indices[0], plan.epoch_indices[1]);
        assert_eq!(plan.reserve(0).len(), 35);
    }

    #[test]
    fn allocation_errors() {
        assert!(allocate(10, AllocationStrategy::FixedNonOverlap, 0.4, 3, 0).is_err());
        assert!(allocate(2, AllocationStrategy::RandomPerEpoch, 0.5, 3, 0).is_err());
        assert!(allocate(10, AllocationStrategy::RandomPerEpoch, 0.0, 1, 0).is_err());
        assert!(allocate(10, AllocationStrategy::RandomPerEpoch, 1.5, 1, 0).is_err());
        assert!(allocate(10, AllocationStrategy::RandomPerEpoch, 0.05, 1, 0).is_err());
        // repeated blocks may exceed the dataset in total
        assert!(allocate(10, AllocationStrategy::FixedRepeated, 0.4, 3, 0).is_ok());
    }

    #[test]
    fn same_seed_same_plan() {
        let a = allocate(100, AllocationStrategy::RandomPerEpoch, 0.3, 3, 9).unwrap();
        let b = allocate(100, AllocationStrategy::RandomPerEpoch, 0.3, 3, 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
