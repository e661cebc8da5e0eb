mod common;

use std::collections::HashSet;

use common::{random_tuple, rng, triples};
use proptest::prelude::*;
use stsm::record::{Example, Origin, SelfMemTuple};
use stsm::select::{
    allocate, audit, build_subset, judge_pair, AllocationStrategy, CaseId, Mix, SelectionError, SelectionOptions,
    SelectionStats, SelectionVerdict,
};

fn gold(n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| {
            let x = triples(&[(&format!("S{i}"), "P", &format!("O{i}"))]);
            Example::new(x, &format!("Long gold text about S{i} and O{i}.")).unwrap()
        })
        .collect()
}

fn tuple_for(ex: &Example) -> SelfMemTuple {
    let [s, _, o] = ex.source.records()[0].fields()[..] else {
        unreachable!()
    };
    SelfMemTuple {
        x: ex.source.clone(),
        y: ex.target.clone(),
        y_prime: Some(format!("{s} p {o}.")),
        x_prime: Some(ex.source.clone()),
        y_dprime: None,
        x_dprime: None,
    }
}

fn verdict(accepted: bool) -> SelectionVerdict {
    SelectionVerdict {
        accepted,
        case_id: CaseId::Case1,
        failed_conditions: Vec::new(),
    }
}

#[test]
fn elite_and_remaining_fill_the_block() {
    let g = gold(10);
    let tuples: Vec<_> = g.iter().map(tuple_for).collect();
    let verdicts: Vec<_> = (0..10).map(|i| verdict(i < 4)).collect();
    let subset = build_subset(&g, &tuples, &verdicts, 10, 1, &[], Mix::EliteAndRemaining).unwrap();
    assert_eq!(subset.len(), 10);
    let elite = subset.iter().filter(|p| p.origin() == Origin::SelfMemoryYPrime).count();
    let remaining = subset.iter().filter(|p| p.origin() == Origin::Remaining).count();
    assert_eq!((elite, remaining), (4, 6));
    for p in subset.iter().filter(|p| p.origin() == Origin::SelfMemoryYPrime) {
        assert!(p.target_text.ends_with('.') && p.target_text.contains(" p "));
    }
}

#[test]
fn nothing_accepted_gives_the_gold_pairs() {
    let g = gold(10);
    let tuples: Vec<_> = g.iter().map(tuple_for).collect();
    let verdicts: Vec<_> = (0..10).map(|_| verdict(false)).collect();
    let subset = build_subset(&g, &tuples, &verdicts, 10, 1, &[], Mix::EliteAndRemaining).unwrap();
    let got: Vec<(&str, &str)> = subset
        .iter()
        .map(|p| (p.source_text.as_str(), p.target_text.as_str()))
        .collect();
    let want: Vec<(&str, &str)> = g.iter().map(|e| (e.source_text.as_str(), e.target.as_str())).collect();
    assert_eq!(got, want);
}

#[test]
fn elite_only_tops_up_from_reserve_after_deduplication() {
    let g = gold(10);
    // every tuple maps to the same elite pair
    let mut tuples: Vec<_> = g.iter().map(tuple_for).collect();
    for t in &mut tuples {
        t.y_prime = Some("S0 p O0.".into());
    }
    let mut same_source = g.clone();
    for e in &mut same_source {
        e.source_text = g[0].source_text.clone();
    }
    let verdicts: Vec<_> = (0..10).map(|_| verdict(true)).collect();
    let reserve = gold(30)[10..].to_vec();
    let subset = build_subset(&same_source, &tuples, &verdicts, 10, 7, &reserve, Mix::EliteOnly).unwrap();
    assert_eq!(subset.len(), 10);
    let distinct: HashSet<_> = subset.iter().map(|p| (&p.source_text, &p.target_text)).collect();
    assert_eq!(distinct.len(), 10);
    assert_eq!(subset.iter().filter(|p| p.origin() == Origin::Gold).count(), 9);

    let again = build_subset(&same_source, &tuples, &verdicts, 10, 7, &reserve, Mix::EliteOnly).unwrap();
    assert_eq!(subset, again);
}

#[test]
fn oversized_union_is_down_sampled() {
    let g = gold(20);
    let tuples: Vec<_> = g.iter().map(tuple_for).collect();
    let verdicts: Vec<_> = (0..20).map(|i| verdict(i % 2 == 0)).collect();
    let subset = build_subset(&g, &tuples, &verdicts, 5, 3, &[], Mix::EliteAndRemaining).unwrap();
    assert_eq!(subset.len(), 5);
}

#[test]
fn errors() {
    let g = gold(3);
    let tuples: Vec<_> = g.iter().map(tuple_for).collect();
    let verdicts: Vec<_> = (0..3).map(|_| verdict(false)).collect();
    assert_eq!(
        build_subset(&g, &tuples, &verdicts, 3, 0, &[], Mix::EliteOnly),
        Err(SelectionError::EmptySubset)
    );
    assert_eq!(
        build_subset(&g, &tuples[..2], &verdicts, 3, 0, &[], Mix::EliteOnly),
        Err(SelectionError::Misaligned {
            gold: 3,
            tuples: 2,
            verdicts: 3
        })
    );
    assert_eq!(
        build_subset(&g, &tuples, &verdicts, 0, 0, &[], Mix::EliteAndRemaining),
        Err(SelectionError::ZeroTarget)
    );
    assert!(allocate(10, AllocationStrategy::FixedNonOverlap, 0.5, 3, 0).is_err());
    assert!(allocate(10, AllocationStrategy::FixedRepeated, 0.05, 3, 0).is_err());
    assert!(allocate(2, AllocationStrategy::RandomPerEpoch, 1.0, 3, 0).is_err());
}

#[test]
fn judge_and_audit_agree_on_random_tuples() {
    let mut r = rng(99);
    let mut stats = SelectionStats::default();
    for _ in 0..2000 {
        let t = random_tuple(&mut r);
        let v = judge_pair(&t, SelectionOptions::default());
        assert!(audit(&t, &v, SelectionOptions::default()), "{t:?} {v:?}");
        stats.add(&v);
        // a tampered verdict must not survive the audit
        if v.accepted {
            let mut forged = v.clone();
            forged.accepted = false;
            forged.failed_conditions = vec![stsm::select::Condition::LenNotShorter];
            assert!(!audit(&t, &forged, SelectionOptions::default()));
        }
    }
    assert_eq!(stats.judged, 2000);
    assert_eq!(stats.accepted_case1 + stats.accepted_case2 + stats.rejected, 2000);
}

proptest! {
    #[test]
    fn allocation_respects_the_budget(
        n in 10usize..400,
        ratio_pct in 1u32..=100,
        epochs in 1usize..5,
        seed in any::<u64>(),
        strategy in prop::sample::select(vec![
            AllocationStrategy::FixedNonOverlap,
            AllocationStrategy::FixedRepeated,
            AllocationStrategy::RandomPerEpoch,
        ]),
    ) {
        let ratio = ratio_pct as f64 / 100.0;
        let Ok(plan) = allocate(n, strategy, ratio, epochs, seed) else {
            let block = (ratio * n as f64 + 1e-9).floor() as usize;
            prop_assert!(
                block == 0 || n < epochs
                    || (strategy == AllocationStrategy::FixedNonOverlap && block * epochs > n)
                    || (strategy == AllocationStrategy::FixedNonOverlap && ratio * epochs as f64 > 1.0 + 1e-9)
            );
            return Ok(());
        };
        let block = plan.block_size();
        prop_assert_eq!(block, (ratio_pct as usize * n) / 100);
        prop_assert_eq!(plan.epoch_indices.len(), epochs);
        for b in &plan.epoch_indices {
            prop_assert_eq!(b.len(), block);
            let distinct: HashSet<_> = b.iter().collect();
            prop_assert_eq!(distinct.len(), block);
            prop_assert!(b.iter().all(|&i| i < n));
        }
        let used: HashSet<usize> = plan.epoch_indices.iter().flatten().copied().collect();
        match strategy {
            AllocationStrategy::FixedNonOverlap => {
                prop_assert_eq!(used.len(), block * epochs);
                prop_assert_eq!(plan.unused().len(), n - block * epochs);
            }
            AllocationStrategy::FixedRepeated => {
                prop_assert!(plan.epoch_indices.iter().all(|b| b == &plan.epoch_indices[0]));
            }
            AllocationStrategy::RandomPerEpoch => {
                for e in 0..epochs {
                    let reserve = plan.reserve(e);
                    prop_assert_eq!(reserve.len(), n - block);
                    prop_assert!(reserve.iter().all(|i| !plan.epoch_indices[e].contains(i)));
                }
            }
        }
        prop_assert_eq!(allocate(n, strategy, ratio, epochs, seed).unwrap(), plan);
    }
}
