//! A small seeded corpus for desk runs and tests.
//!
//! Entries describe invented people with one to three triples. Most gold
//! texts are wordier than the rule-based renderings, a fifth are terser,
//! and about a quarter of the entries state the same city under two
//! predicates, so the optimizer has a sentence to drop.
//!
//! The corpus is emitted as DART-style JSON so it goes through the same
//! loader as real data. A copy lives in `data/synthetic/`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::dataset::{parse_dart, DatasetSplit, SplitName};
use crate::gateway::rule_based::predicate_phrase;
use crate::seed::rng_for;

pub const DESK_SEED: u64 = 20_231_104;
pub const DESK_SIZES: [usize; 3] = [200, 20, 20];

const FIRST: &[&str] = &[
    "Anna", "Boris", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas", "Katya", "Lorenzo",
    "Maren", "Nils", "Olga", "Pavel", "Rosa", "Stefan", "Tomas", "Ulla",
];
const LAST: &[&str] = &[
    "Berg",
    "Castell",
    "Dahl",
    "Ekholm",
    "Ferrante",
    "Gruber",
    "Holm",
    "Ivers",
    "Janssen",
    "Kowal",
    "Lindqvist",
    "Moreau",
    "Novak",
    "Ortiz",
    "Pellegrini",
    "Quist",
    "Rasmussen",
    "Sandoval",
    "Tamm",
    "Varga",
];
const CITIES: &[&str] = &[
    "Lisbon", "Oslo", "Kyoto", "Quito", "Perth", "Dakar", "Tallinn", "Hanoi", "Bergen", "Porto", "Riga", "Cusco",
];
const CLUBS: &[&str] = &[
    "Harbour United",
    "Riverside Rovers",
    "Northgate Athletic",
    "Eastfield Town",
    "Westbrook Albion",
    "Kingsmoor City",
];
const JOBS: &[&str] = &[
    "architect",
    "painter",
    "chemist",
    "pilot",
    "novelist",
    "cartographer",
    "violinist",
];

const VERBOSE: &[&str] = &[
    "Records show that {s} {p} {o}.",
    "According to the archive, {s} {p} {o}.",
    "It is documented that {s} {p} {o} as well.",
];

fn object_for(predicate: &str, rng: &mut impl Rng) -> String {
    let pick = |xs: &[&str], rng: &mut _| xs.choose(rng).expect("non-empty").to_string();
    match predicate {
        "BORN_IN" | "LIVES_IN" => pick(CITIES, rng),
        "PLAYS_FOR" => pick(CLUBS, rng),
        "BIRTH_YEAR" => rng.gen_range(1940..2000).to_string(),
        "OCCUPATION" => pick(JOBS, rng),
        _ => unreachable!("unknown predicate {predicate}"),
    }
}

fn entry(rng: &mut impl Rng) -> Value {
    let subject = format!(
        "{} {}",
        FIRST.choose(rng).expect("non-empty"),
        LAST.choose(rng).expect("non-empty")
    );
    let mut triples: Vec<(String, String)> = Vec::new();
    if rng.gen_range(0..100) < 25 {
        let city = object_for("BORN_IN", rng);
        triples.push(("BORN_IN".into(), city.clone()));
        triples.push(("LIVES_IN".into(), city));
        if rng.gen_bool(0.5) {
            triples.push(("OCCUPATION".into(), object_for("OCCUPATION", rng)));
        }
    } else {
        let mut preds = ["BORN_IN", "PLAYS_FOR", "BIRTH_YEAR", "OCCUPATION"];
        preds.shuffle(rng);
        let n = rng.gen_range(1..=3);
        for p in &preds[..n] {
            triples.push((p.to_string(), object_for(p, rng)));
        }
    }

    let terse = rng.gen_range(0..100) < 20;
    let text = triples
        .iter()
        .map(|(p, o)| {
            if terse {
                format!("{subject}, {o}.")
            } else {
                VERBOSE
                    .choose(rng)
                    .expect("non-empty")
                    .replace("{s}", &subject)
                    .replace("{p}", &predicate_phrase(p))
                    .replace("{o}", o)
            }
        })
        .collect::<Vec<_>>()
        .join(" ");

    json!({
        "tripleset": triples.iter().map(|(p, o)| json!([subject, p, o])).collect::<Vec<_>>(),
        "annotations": [{"source": "synthetic", "text": text}],
    })
}

/// The three split documents (train, validation, test) for `seed`, with
/// the given entry counts.
pub fn corpus_documents(seed: u64, sizes: [usize; 3]) -> [Value; 3] {
    let mut docs = [Value::Null, Value::Null, Value::Null];
    for (i, (doc, n)) in docs.iter_mut().zip(sizes).enumerate() {
        let mut rng = rng_for(seed, "synthetic-corpus", i as u64);
        *doc = Value::Array((0..n).map(|_| entry(&mut rng)).collect());
    }
    docs
}

/// The bundled desk corpus: 200 training, 20 validation and 20 test
/// examples.
pub fn desk_corpus() -> [DatasetSplit; 3] {
    let docs = corpus_documents(DESK_SEED, DESK_SIZES);
    let mut splits = docs
        .iter()
        .zip(SplitName::ALL)
        .map(|(doc, name)| parse_dart(doc, name).expect("generated documents are arrays"));
    [
        splits.next().expect("three splits"),
        splits.next().expect("three splits"),
        splits.next().expect("three splits"),
    ]
}

/// Pretty JSON with a trailing newline, as stored under `data/synthetic/`.
pub fn render_document(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("json values serialize");
    s.push('\n');
    s
}
