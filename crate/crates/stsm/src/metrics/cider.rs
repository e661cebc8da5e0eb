//! CIDEr: tf-idf weighted n-gram cosine similarity, n = 1..4, × 10.
//!
//! Document frequencies count the corpus items whose reference set
//! contains an n-gram; `idf = ln(N / max(1, df))`.

use std::collections::{BTreeMap, BTreeSet};

use super::{check_aligned, ngram_counts, MetricError};
use crate::text::tokenize;

pub const CIDER_MAX_N: usize = 4;
pub const CIDER_SCALE: f64 = 10.0;

type Vector<'a> = BTreeMap<&'a [String], f64>;

fn tfidf<'a>(tokens: &'a [String], n: usize, df: &BTreeMap<&[String], usize>, log_n: f64) -> Vector<'a> {
    ngram_counts(tokens, n)
        .into_iter()
        .map(|(gram, tf)| {
            let d = df.get(gram).copied().unwrap_or(0).max(1) as f64;
            (gram, tf as f64 * (log_n - d.ln()))
        })
        .collect()
}

fn cosine(a: &Vector, b: &Vector) -> f64 {
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-item CIDEr scores; their mean is the corpus score.
pub fn cider_items(candidates: &[String], references: &[Vec<String>]) -> Result<Vec<f64>, MetricError> {
    check_aligned(candidates, references)?;
    if candidates.len() < 2 {
        return Err(MetricError::DegenerateIdf(candidates.len()));
    }
    let cands: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(c)).collect();
    let refs: Vec<Vec<Vec<String>>> = references
        .iter()
        .map(|rs| rs.iter().map(|r| tokenize(r)).collect())
        .collect();

    let mut df: BTreeMap<&[String], usize> = BTreeMap::new();
    for rs in &refs {
        let mut seen: BTreeSet<&[String]> = BTreeSet::new();
        for r in rs {
            for n in 1..=CIDER_MAX_N {
                seen.extend(ngram_counts(r, n).into_keys());
            }
        }
        for gram in seen {
            *df.entry(gram).or_insert(0) += 1;
        }
    }
    let log_n = (candidates.len() as f64).ln();

    let scores = cands
        .iter()
        .zip(&refs)
        .map(|(cand, rs)| {
            let mut total = 0.0;
            for n in 1..=CIDER_MAX_N {
                let cv = tfidf(cand, n, &df, log_n);
                let sim: f64 = rs.iter().map(|r| cosine(&cv, &tfidf(r, n, &df, log_n))).sum();
                total += sim / rs.len() as f64;
            }
            CIDER_SCALE * total / CIDER_MAX_N as f64
        })
        .collect();
    Ok(scores)
}

pub fn cider(candidates: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    let items = cider_items(candidates, references)?;
    Ok(items.iter().sum::<f64>() / items.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn exact_item_scores_ten_and_disjoint_zero() {
        let c = s(&["one two three four", "nine ten eleven twelve"]);
        let r = vec![s(&["one two three four"]), s(&["five six seven eight"])];
        let items = cider_items(&c, &r).unwrap();
        assert!((items[0] - 10.0).abs() < 1e-9);
        assert_eq!(items[1], 0.0);
        assert!((cider(&c, &r).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn single_item_corpus_is_degenerate() {
        assert_eq!(
            cider(&s(&["a"]), &[s(&["a"])]).unwrap_err(),
            MetricError::DegenerateIdf(1)
        );
    }

    #[test]
    fn bounded() {
        let c = s(&["a b c d e", "a b x y", "q r s t"]);
        let r = vec![s(&["a b c d e", "a b"]), s(&["a b x y z"]), s(&["q r s t"])];
        for v in cider_items(&c, &r).unwrap() {
            assert!((0.0..=10.0 + 1e-9).contains(&v));
        }
    }
}
