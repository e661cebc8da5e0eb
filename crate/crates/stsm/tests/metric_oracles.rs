mod common;

use common::{cider_oracle, nist_oracle, record_keys, rng, strings, triples};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use stsm::metrics::slot::osf_counts;
use stsm::metrics::{bleu, bleu_stats, cider, meteor, nist, osf, rouge_l, ter, EvalItem, MetricReport};
use stsm::record::{Record, RecordKind, RecordSet};

#[test]
fn nist_three_sentence_hand_oracle() {
    // Six distinct words: each unigram carries log2(6/1) bits and every
    // bigram log2(1/1) = 0, so the score is log2 6.
    let corpus = ["a b", "c d", "e f"];
    let refs: Vec<Vec<String>> = corpus.iter().map(|r| vec![r.to_string()]).collect();
    let score = nist(&strings(&corpus), &refs).unwrap();
    assert!((score - 6f64.log2()).abs() < 1e-12, "{score}");
    assert!((score - nist_oracle(&corpus, &corpus)).abs() < 1e-12);
}

#[test]
fn nist_matches_oracle_on_random_corpora() {
    let vocab = ["a", "b", "c", "d", "e"];
    let mut r = rng(7);
    for _ in 0..200 {
        let n_items = r.gen_range(1..5);
        let mut cands = Vec::new();
        let mut refs = Vec::new();
        for _ in 0..n_items {
            let len = r.gen_range(1..7);
            let rf: Vec<&str> = (0..len).map(|_| *vocab.choose(&mut r).unwrap()).collect();
            let extra = r.gen_range(0..3);
            let c: Vec<&str> = (0..len + extra).map(|_| *vocab.choose(&mut r).unwrap()).collect();
            refs.push(rf.join(" "));
            cands.push(c.join(" "));
        }
        let c: Vec<&str> = cands.iter().map(String::as_str).collect();
        let rs: Vec<&str> = refs.iter().map(String::as_str).collect();
        let lib = nist(&cands, &refs.iter().map(|x| vec![x.clone()]).collect::<Vec<_>>()).unwrap();
        assert!((lib - nist_oracle(&c, &rs)).abs() < 1e-9, "{cands:?} {refs:?}");
    }
}

#[test]
fn cider_identity_with_shared_vocabulary_matches_oracle() {
    let items = ["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"];
    let refs: Vec<Vec<&str>> = items.iter().map(|i| vec![*i]).collect();
    let lib = cider(&strings(&items), &refs.iter().map(|r| strings(r)).collect::<Vec<_>>()).unwrap();
    let oracle = cider_oracle(&items, &refs);
    assert!((lib - oracle).abs() < 1e-9, "{lib} vs {oracle}");
    // idf rescales both sides equally, so every non-zero vector has cosine 1
    assert!((lib - 10.0).abs() < 1e-9, "{lib}");
}

#[test]
fn cider_identity_with_fully_shared_ngrams_scores_zero() {
    // every n-gram occurs in every reference, so all idf weights vanish
    let items = ["a b", "a b"];
    let refs: Vec<Vec<&str>> = items.iter().map(|i| vec![*i]).collect();
    let lib = cider(&strings(&items), &refs.iter().map(|r| strings(r)).collect::<Vec<_>>()).unwrap();
    assert_eq!(lib, 0.0);
    assert_eq!(cider_oracle(&items, &refs), 0.0);
}

#[test]
fn cider_matches_oracle_on_random_corpora() {
    let vocab = ["a", "b", "c", "d", "e", "f"];
    let mut r = rng(11);
    for _ in 0..100 {
        let n_items = r.gen_range(2..5);
        let mut cands: Vec<String> = Vec::new();
        let mut refs: Vec<Vec<String>> = Vec::new();
        for _ in 0..n_items {
            let mk = |r: &mut rand_chacha::ChaCha8Rng| {
                let len = r.gen_range(1..7);
                (0..len)
                    .map(|_| *vocab.choose(r).unwrap())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            cands.push(mk(&mut r));
            refs.push((0..r.gen_range(1..3)).map(|_| mk(&mut r)).collect());
        }
        let c: Vec<&str> = cands.iter().map(String::as_str).collect();
        let rr: Vec<Vec<&str>> = refs.iter().map(|v| v.iter().map(String::as_str).collect()).collect();
        let lib = cider(&cands, &refs).unwrap();
        assert!((lib - cider_oracle(&c, &rr)).abs() < 1e-9);
    }
}

#[test]
fn hand_examples() {
    let stats = bleu_stats(&strings(&["the the the"]), &[strings(&["the cat"])], 4).unwrap();
    assert!((stats.precisions(false)[0] - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(bleu(&strings(&["a b c d"]), &[strings(&["d c b a"])]).unwrap(), 0.0);
    assert!((ter("a b c", &strings(&["a b d"])).unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert!((ter("b a", &strings(&["a b"])).unwrap() - 0.5).abs() < 1e-9);
    assert!((rouge_l("a b c d", &strings(&["a c b d"])) - 0.75).abs() < 1e-9);
    assert!((meteor("the cat", &strings(&["the cat"])) - 0.9375).abs() < 1e-9);
    assert!(meteor("cats", &strings(&["cat"])) > 0.0);
    let x = triples(&[("A", "P", "B"), ("C", "Q", "D")]);
    let s = osf(&x, Some(&triples(&[("A", "P", "B")]))).unwrap();
    assert_eq!((s.precision, s.recall), (1.0, 0.5));
    assert!((s.f1 - 2.0 / 3.0).abs() < 1e-9);
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "the", "cat"]), 1..8)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn bounded_metrics_stay_in_range(
        rows in prop::collection::vec((sentence(), prop::collection::vec(sentence(), 1..3)), 2..6)
    ) {
        let items: Vec<EvalItem> = rows
            .iter()
            .map(|(c, r)| EvalItem {
                candidate: c.clone(),
                references: r.clone(),
                source: None,
                reconstructed: None,
            })
            .collect();
        let report = MetricReport::compute(&items).unwrap();
        prop_assert!(report.in_range(), "{report:?}");
    }

    #[test]
    fn identity_hits_the_optimum(
        rows in prop::collection::vec(sentence(), 2..6)
    ) {
        let refs: Vec<Vec<String>> = rows.iter().map(|r| vec![r.clone()]).collect();
        prop_assert!((bleu(&rows, &refs).unwrap() - 1.0).abs() < 1e-9 || rows.iter().any(|r| r.split(' ').count() < 4));
        for r in &rows {
            prop_assert_eq!(ter(r, std::slice::from_ref(r)).unwrap(), 0.0);
            prop_assert!((rouge_l(r, std::slice::from_ref(r)) - 1.0).abs() < 1e-9);
            let m = r.split(' ').count() as f64;
            prop_assert!((meteor(r, std::slice::from_ref(r)) - (1.0 - 0.5 * (1.0 / m).powi(3))).abs() < 1e-9);
        }
    }

    #[test]
    fn appending_a_stray_word_never_helps(c in sentence(), r in sentence()) {
        let refs = vec![r.clone()];
        let longer = format!("{c} zzz");
        let before = bleu_stats(std::slice::from_ref(&c), std::slice::from_ref(&refs), 4).unwrap().precisions(false);
        let after = bleu_stats(std::slice::from_ref(&longer), std::slice::from_ref(&refs), 4).unwrap().precisions(false);
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(a <= &(b + 1e-12));
        }
        let (_, rec_before) = stsm::metrics::rouge::lcs_precision_recall(&c, &r);
        let (_, rec_after) = stsm::metrics::rouge::lcs_precision_recall(&longer, &r);
        prop_assert!(rec_after <= rec_before + 1e-12);
    }

    #[test]
    fn osf_precision_one_is_set_inclusion(
        input in prop::collection::btree_set((0u8..3, 0u8..2, 0u8..3), 1..5),
        rec in prop::collection::btree_set((0u8..3, 0u8..2, 0u8..3), 0..5)
    ) {
        let mk = |set: &std::collections::BTreeSet<(u8, u8, u8)>| -> Option<RecordSet> {
            let records: Vec<Record> = set
                .iter()
                .map(|(s, p, o)| Record::triple(&format!("s{s}"), &format!("P{p}"), &format!("o{o}")).unwrap())
                .collect();
            RecordSet::new(RecordKind::Tripleset, records).ok()
        };
        let x = mk(&input).unwrap();
        let r = mk(&rec);
        let counts = osf_counts(&x, r.as_ref(), false).unwrap();
        let precision_one = counts.reconstructed > 0 && counts.score().precision == 1.0;
        let oracle = r.as_ref().is_some_and(|r| record_keys(r).is_subset(&record_keys(&x)));
        prop_assert_eq!(precision_one, oracle);
    }
}
