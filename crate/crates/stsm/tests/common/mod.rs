//! Independent reference implementations and random instance generators
//! shared by the integration tests. Nothing here calls the code under test
//! except to build inputs.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stsm::record::{Record, RecordKind, RecordSet, SelfMemTuple};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn triples(ts: &[(&str, &str, &str)]) -> RecordSet {
    RecordSet::new(
        RecordKind::Tripleset,
        ts.iter().map(|(s, p, o)| Record::triple(s, p, o).unwrap()).collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------- greedy

/// The sentence/value double loop, transcribed line by line. Matching is
/// case-insensitive substring search.
pub fn greedy_reference(sentences: &[String], values: &[String]) -> (Vec<String>, Vec<String>) {
    let mut ms: Vec<String> = Vec::new();
    let mut mv: Vec<String> = Vec::new();
    for s in sentences {
        for v in values {
            if s.to_lowercase().contains(&v.to_lowercase()) && !mv.contains(v) {
                mv.push(v.clone());
                if !ms.contains(s) {
                    ms.push(s.clone());
                }
            }
        }
    }
    (ms, mv)
}

/// Whether some subset of the sentences mentions every value, by trying
/// all of them.
pub fn cover_exists(sentences: &[String], values: &[String]) -> bool {
    let n = sentences.len();
    (0u32..(1 << n)).any(|mask| {
        values
            .iter()
            .all(|v| (0..n).any(|i| mask & (1 << i) != 0 && sentences[i].to_lowercase().contains(&v.to_lowercase())))
    })
}

const WORDS: &[&str] = &[
    "alpha", "bravo", "delta", "echo", "golf", "hotel", "kilo", "lima", "oscar", "tango",
];
const FILLER: &[&str] = &["the", "was", "near", "with", "and", "very", "old", "new"];

/// A random optimizer instance: up to `max_s` sentences built from up to
/// `max_v` distinct single- or two-word values plus filler, with random
/// capitalisation. Sentences end in a period.
pub fn optimizer_instance(rng: &mut impl Rng, max_s: usize, max_v: usize) -> (Vec<String>, Vec<String>) {
    let mut pool: Vec<&str> = WORDS.to_vec();
    pool.shuffle(rng);
    let n_values = rng.gen_range(1..=max_v);
    let values: Vec<String> = (0..n_values)
        .map(|i| {
            if rng.gen_bool(0.3) {
                format!("{} {}", pool[2 * i], pool[2 * i + 1])
            } else {
                pool[2 * i].to_string()
            }
        })
        .collect();
    let n_sent = rng.gen_range(1..=max_s);
    let mut sentences = Vec::with_capacity(n_sent);
    for _ in 0..n_sent {
        let mut words: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(1..4) {
            words.push(FILLER.choose(rng).unwrap().to_string());
        }
        for v in &values {
            if rng.gen_bool(0.35) {
                let v = if rng.gen_bool(0.2) { v.to_uppercase() } else { v.clone() };
                words.insert(rng.gen_range(0..=words.len()), v);
            }
        }
        sentences.push(format!("{}.", words.join(" ")));
    }
    if rng.gen_bool(0.1) && sentences.len() > 1 {
        let dup = sentences[0].clone();
        sentences.push(dup);
    }
    (sentences, values)
}

// ---------------------------------------------------------------- selection

/// Lower-cased field tuples, for set comparisons.
pub fn record_keys(rs: &RecordSet) -> BTreeSet<Vec<String>> {
    rs.records()
        .iter()
        .map(|r| r.fields().iter().map(|f| f.to_lowercase()).collect())
        .collect()
}

pub fn source_values(rs: &RecordSet) -> Vec<String> {
    let mut out = Vec::new();
    for r in rs.records() {
        let f = r.fields();
        let picked: Vec<&str> = match r {
            Record::Triple { .. } => vec![f[0], f[2]],
            Record::Mr { .. } => vec![f[1]],
        };
        for v in picked {
            if !out.iter().any(|o: &String| o == v) {
                out.push(v.to_string());
            }
        }
    }
    out
}

/// Which of the three conditions `(target, reconstruction)` violates for
/// source `x` and gold `y`: shorter-than-gold (chars), all values present,
/// non-empty reconstruction that is a subset of `x`.
pub fn violations(x: &RecordSet, y: &str, target: &str, rec: Option<&RecordSet>) -> [bool; 3] {
    let norm = |t: &str| t.split_whitespace().collect::<Vec<_>>().join(" ");
    let len_bad = norm(target).chars().count() >= norm(y).chars().count();
    let lower = target.to_lowercase();
    let value_bad = !source_values(x).iter().all(|v| lower.contains(&v.to_lowercase()));
    let subset_bad = match rec {
        None => true,
        Some(r) => r.is_empty() || !record_keys(r).is_subset(&record_keys(x)),
    };
    [len_bad, value_bad, subset_bad]
}

const PEOPLE: &[&str] = &["Ann", "Bo", "Cy", "Di"];
const PREDS: &[&str] = &["LIKES", "KNOWS", "VISITS"];
const PLACES: &[&str] = &["Rome", "Oslo", "Lima", "Kyiv", "Bern"];

fn random_triples(rng: &mut impl Rng, n: usize) -> RecordSet {
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    while records.len() < n {
        let t = (
            *PEOPLE.choose(rng).unwrap(),
            *PREDS.choose(rng).unwrap(),
            *PLACES.choose(rng).unwrap(),
        );
        if seen.insert(t) {
            records.push(Record::triple(t.0, t.1, t.2).unwrap());
        }
    }
    RecordSet::new(RecordKind::Tripleset, records).unwrap()
}

fn render(rs: &RecordSet, rng: &mut impl Rng) -> String {
    rs.records()
        .iter()
        .map(|r| {
            let f = r.fields();
            if rng.gen_bool(0.15) {
                format!("{} {}.", f[0], f[1].to_lowercase())
            } else {
                format!("{} {} {}.", f[0], f[1].to_lowercase(), f[2])
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn perturb(x: &RecordSet, rng: &mut impl Rng) -> Option<RecordSet> {
    match rng.gen_range(0..5) {
        0 => None,
        1 => Some(x.clone()),
        2 => {
            let keep: Vec<Record> = x.records().iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            RecordSet::new(RecordKind::Tripleset, keep).ok()
        }
        3 => {
            let n = rng.gen_range(1..3);
            Some(random_triples(rng, n))
        }
        _ => {
            let mut r = x.records().to_vec();
            r.push(random_triples(rng, 1).records()[0].clone());
            RecordSet::new(RecordKind::Tripleset, r).ok()
        }
    }
}

/// A random self-memory tuple touching every branch of the two cases.
pub fn random_tuple(rng: &mut impl Rng) -> SelfMemTuple {
    let n = rng.gen_range(1..4);
    let x = random_triples(rng, n);
    let y = match rng.gen_range(0..3) {
        0 => format!("Reports say {}", render(&x, rng)),
        1 => render(&x, rng),
        _ => "Short.".to_string(),
    };
    let y_prime = (!rng.gen_bool(0.1)).then(|| render(&x, rng));
    let x_prime = perturb(&x, rng);
    let (y_dprime, x_dprime) = match (&y_prime, rng.gen_range(0..3)) {
        (None, _) => (None, None),
        (Some(yp), 0) => (Some(yp.clone()), x_prime.clone()),
        (Some(yp), 1) => {
            let first = yp.split(". ").next().unwrap_or(yp).trim_end_matches('.').to_string() + ".";
            (Some(first), perturb(&x, rng))
        }
        (Some(_), _) => (Some(render(&x, rng)), perturb(&x, rng)),
    };
    SelfMemTuple {
        x,
        y,
        y_prime,
        x_prime,
        y_dprime,
        x_dprime,
    }
}

// ---------------------------------------------------------------- metrics

fn grams(tokens: &[&str], n: usize) -> HashMap<Vec<String>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(|s| s.to_string()).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// NIST for whitespace-tokenised lowercase text with a single reference
/// per item and candidates no shorter than references.
pub fn nist_oracle(cands: &[&str], refs: &[&str]) -> f64 {
    let ref_toks: Vec<Vec<&str>> = refs.iter().map(|r| r.split_whitespace().collect()).collect();
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    let mut words = 0;
    for r in &ref_toks {
        words += r.len();
        for n in 1..=5 {
            for (g, c) in grams(r, n) {
                *counts.entry(g).or_insert(0) += c;
            }
        }
    }
    let mut score = 0.0;
    for n in 1..=5 {
        let mut info = 0.0;
        let mut total = 0;
        for (c, r) in cands.iter().zip(&ref_toks) {
            let ct: Vec<&str> = c.split_whitespace().collect();
            let rg = grams(r, n);
            for (g, k) in grams(&ct, n) {
                total += k;
                let m = k.min(rg.get(&g).copied().unwrap_or(0));
                if m > 0 {
                    let denom = if n == 1 { words } else { counts[&g[..n - 1].to_vec()] };
                    info += m as f64 * (denom as f64 / counts[&g] as f64).log2();
                }
            }
        }
        if total > 0 {
            score += info / total as f64;
        }
    }
    score
}

/// CIDEr by explicit dense vectors over the n-gram vocabulary.
pub fn cider_oracle(cands: &[&str], refs: &[Vec<&str>]) -> f64 {
    let n_items = cands.len() as f64;
    let mut total = 0.0;
    for (i, cand) in cands.iter().enumerate() {
        let mut item = 0.0;
        for n in 1..=4 {
            let mut vocab: Vec<Vec<String>> = Vec::new();
            let mut df: HashMap<Vec<String>, f64> = HashMap::new();
            for rs in refs {
                let mut present = BTreeSet::new();
                for r in rs {
                    let toks: Vec<&str> = r.split_whitespace().collect();
                    present.extend(grams(&toks, n).into_keys());
                }
                for g in present {
                    *df.entry(g).or_insert(0.0) += 1.0;
                }
            }
            let vec_of = |text: &str, vocab: &mut Vec<Vec<String>>| -> HashMap<Vec<String>, f64> {
                let toks: Vec<&str> = text.split_whitespace().collect();
                grams(&toks, n)
                    .into_iter()
                    .map(|(g, tf)| {
                        if !vocab.contains(&g) {
                            vocab.push(g.clone());
                        }
                        let d = df.get(&g).copied().unwrap_or(0.0).max(1.0);
                        let w = tf as f64 * (n_items / d).ln();
                        (g, w)
                    })
                    .collect()
            };
            let c = vec_of(cand, &mut vocab);
            let mut sims = 0.0;
            for r in &refs[i] {
                let rv = vec_of(r, &mut vocab);
                let dense = |m: &HashMap<Vec<String>, f64>| -> Vec<f64> {
                    vocab.iter().map(|g| m.get(g).copied().unwrap_or(0.0)).collect()
                };
                let (a, b) = (dense(&c), dense(&rv));
                let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                sims += if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
            }
            item += sims / refs[i].len() as f64;
        }
        total += 10.0 * item / 4.0;
    }
    total / n_items
}
