//! Deterministic template baselines for both model directions.
//!
//! The data-to-text side renders every record as
//! `"<subject> <predicate phrase> <object>."`, where the phrase is the
//! predicate (or MR key) lowercased with underscores turned into spaces.
//! The text-to-data side locates known source values in the text
//! (longest first, on word boundaries) and reads a record off every pair of
//! neighbouring values separated by exactly a known predicate phrase. On
//! clean inputs the two are mutual inverses.

use std::collections::{BTreeMap, BTreeSet};

use crate::linearize::{delinearize, linearize, LinearFormat};
use crate::record::{Record, RecordKind, RecordSet};
use crate::text::normalize_text;

/// Vocabulary the baselines know about: source values and predicate
/// phrases, gathered from the loaded data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleLexicon {
    kind: RecordKind,
    format: LinearFormat,
    /// Longest first, ties broken lexicographically.
    values: Vec<String>,
    /// Rendered phrase → original predicate or key. First one seen wins.
    predicates: BTreeMap<String, String>,
}

/// `"LOAN_CLUB"` → `"loan club"`.
pub fn predicate_phrase(predicate: &str) -> String {
    normalize_text(&predicate.replace('_', " ")).to_lowercase()
}

impl RuleLexicon {
    pub fn new(kind: RecordKind) -> Self {
        RuleLexicon {
            kind,
            format: LinearFormat::default(),
            values: Vec::new(),
            predicates: BTreeMap::new(),
        }
    }

    pub fn from_record_sets<'a>(kind: RecordKind, sets: impl IntoIterator<Item = &'a RecordSet>) -> Self {
        let mut lexicon = RuleLexicon::new(kind);
        for rs in sets {
            lexicon.add(rs);
        }
        lexicon
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn add(&mut self, rs: &RecordSet) {
        let mut values: BTreeSet<String> = self.values.drain(..).collect();
        for r in rs.records() {
            match r {
                Record::Triple {
                    subject,
                    predicate,
                    object,
                } => {
                    values.insert(subject.clone());
                    values.insert(object.clone());
                    self.predicates
                        .entry(predicate_phrase(predicate))
                        .or_insert_with(|| predicate.clone());
                }
                Record::Mr { key, value } => {
                    values.insert(value.clone());
                    if *key != self.format.subject_key {
                        self.predicates
                            .entry(predicate_phrase(key))
                            .or_insert_with(|| key.clone());
                    }
                }
            }
        }
        self.values = values.into_iter().collect();
        self.values
            .sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
    }

    /// Data-to-text: linearized records in, template sentences out. Input
    /// that does not parse yields an empty string.
    pub fn render(&self, source_text: &str) -> String {
        let Ok(parsed) = delinearize(source_text, self.kind, &self.format) else {
            return String::new();
        };
        let records = parsed.records.records();
        let mut sentences = Vec::with_capacity(records.len());
        match self.kind {
            RecordKind::Tripleset => {
                for r in records {
                    if let Record::Triple {
                        subject,
                        predicate,
                        object,
                    } = r
                    {
                        sentences.push(format!("{subject} {} {object}.", predicate_phrase(predicate)));
                    }
                }
            }
            RecordKind::MrSet => {
                let subject = match &records[0] {
                    Record::Mr { value, .. } => value.clone(),
                    Record::Triple { .. } => unreachable!("MR set holds MR records"),
                };
                for r in &records[1..] {
                    if let Record::Mr { key, value } = r {
                        sentences.push(format!("{subject} {} {value}.", predicate_phrase(key)));
                    }
                }
                if sentences.is_empty() {
                    sentences.push(format!("{subject}."));
                }
            }
        }
        sentences.join(" ")
    }

    /// Non-overlapping value spans, longest values claimed first.
    fn value_spans<'a>(&'a self, text: &str) -> Vec<(usize, usize, &'a str)> {
        let mut claimed = vec![false; text.len()];
        let mut spans = Vec::new();
        for value in &self.values {
            for (start, _) in text.match_indices(value.as_str()) {
                let end = start + value.len();
                if claimed[start..end].iter().any(|&c| c) {
                    continue;
                }
                let before_ok = text[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
                let after_ok = text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
                if before_ok && after_ok {
                    claimed[start..end].iter_mut().for_each(|c| *c = true);
                    spans.push((start, end, value.as_str()));
                }
            }
        }
        spans.sort_by_key(|&(s, _, _)| s);
        spans
    }

    /// Text-to-data: recovered records, linearized. Text with nothing
    /// recoverable yields an empty string.
    pub fn parse(&self, text: &str) -> String {
        let spans = self.value_spans(text);
        let mut triples: Vec<(&str, &str, &str)> = Vec::new();
        for pair in spans.windows(2) {
            let (_, a_end, a) = pair[0];
            let (b_start, _, b) = pair[1];
            let between = text[a_end..b_start].trim();
            if let Some(predicate) = self.predicates.get(between) {
                triples.push((a, predicate, b));
            }
        }

        let records: Vec<Record> = match self.kind {
            RecordKind::Tripleset => triples
                .iter()
                .filter_map(|(s, p, o)| Record::triple(s, p, o).ok())
                .collect(),
            RecordKind::MrSet => {
                let Some(subject) = triples.first().map(|t| t.0).or_else(|| spans.first().map(|s| s.2)) else {
                    return String::new();
                };
                std::iter::once(Record::mr(&self.format.subject_key, subject))
                    .chain(triples.iter().map(|(_, k, v)| Record::mr(k, v)))
                    .filter_map(Result::ok)
                    .collect()
            }
        };
        RecordSet::new(self.kind, records)
            .ok()
            .and_then(|rs| linearize(&rs, &self.format).ok())
            .unwrap_or_default()
    }
}
