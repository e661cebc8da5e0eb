//! Record sets to and from the flat `s : p : o | ...` string format.
//!
//! Triples render as `subject : predicate : object`. MR sets put the
//! common-subject pair (`name : <subject>`) first, then the remaining
//! pairs as `key : value`. Records are joined by `" | "`.

use thiserror::Error;

use crate::record::{Record, RecordError, RecordKind, RecordSet, FIELD_SEP, RECORD_SEP};
use crate::text::normalize_text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearizeError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("field {0:?} collides with a separator of the linear format")]
    SeparatorCollision(String),
    #[error("MR set has {0} \"{1}\" pairs; expected at most one")]
    DuplicateSubject(usize, String),
    #[error("no parseable record in model output ({dropped} malformed segments dropped)")]
    EmptyOutput { dropped: usize },
    #[error("invalid linear format: separators must be non-empty and distinct")]
    InvalidFormat,
}

/// Separators and the E2E subject key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormat {
    pub record_sep: String,
    pub field_sep: String,
    pub subject_key: String,
}

impl Default for LinearFormat {
    fn default() -> Self {
        LinearFormat {
            record_sep: RECORD_SEP.to_string(),
            field_sep: FIELD_SEP.to_string(),
            subject_key: "name".to_string(),
        }
    }
}

impl LinearFormat {
    fn validate(&self) -> Result<(), LinearizeError> {
        if self.record_sep.is_empty() || self.field_sep.is_empty() || self.record_sep == self.field_sep {
            return Err(LinearizeError::InvalidFormat);
        }
        Ok(())
    }

    fn collides(&self, field: &str) -> bool {
        let padded = format!(" {field} ");
        padded.contains(self.record_sep.as_str()) || padded.contains(self.field_sep.as_str())
    }
}

/// Records in rendering order: for MR sets the subject pair moves to the
/// front. Without a subject pair the first MR stands in for it.
fn rendering_order<'a>(rs: &'a RecordSet, fmt: &LinearFormat) -> Result<Vec<&'a Record>, LinearizeError> {
    let records = rs.records();
    if rs.kind() == RecordKind::Tripleset {
        return Ok(records.iter().collect());
    }
    let subjects: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r, Record::Mr { key, .. } if *key == fmt.subject_key))
        .map(|(i, _)| i)
        .collect();
    match subjects.as_slice() {
        [] => Ok(records.iter().collect()),
        [i] => {
            let mut out = Vec::with_capacity(records.len());
            out.push(&records[*i]);
            out.extend(records.iter().enumerate().filter(|(j, _)| j != i).map(|(_, r)| r));
            Ok(out)
        }
        many => Err(LinearizeError::DuplicateSubject(many.len(), fmt.subject_key.clone())),
    }
}

/// Whether an MR set carries an explicit subject pair.
pub fn has_subject_pair(rs: &RecordSet, fmt: &LinearFormat) -> bool {
    rs.records()
        .iter()
        .any(|r| matches!(r, Record::Mr { key, .. } if *key == fmt.subject_key))
}

pub fn linearize(rs: &RecordSet, fmt: &LinearFormat) -> Result<String, LinearizeError> {
    fmt.validate()?;
    let mut segments = Vec::with_capacity(rs.len());
    for record in rendering_order(rs, fmt)? {
        let fields = record.fields();
        if let Some(bad) = fields.iter().find(|f| fmt.collides(f)) {
            return Err(LinearizeError::SeparatorCollision(bad.to_string()));
        }
        segments.push(fields.join(&fmt.field_sep));
    }
    Ok(segments.join(&fmt.record_sep))
}

/// A parsed record set plus the number of segments that had to be dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delinearized {
    pub records: RecordSet,
    pub dropped: usize,
}

/// Parses (possibly noisy) linearized text. Segments with the wrong field
/// count or invalid fields are dropped and counted.
pub fn delinearize(t: &str, kind: RecordKind, fmt: &LinearFormat) -> Result<Delinearized, LinearizeError> {
    fmt.validate()?;
    let text = normalize_text(t);
    let arity = match kind {
        RecordKind::Tripleset => 3,
        RecordKind::MrSet => 2,
    };
    let mut records = Vec::new();
    let mut dropped = 0;
    if text.is_empty() {
        return Err(LinearizeError::EmptyOutput { dropped });
    }
    for segment in text.split(fmt.record_sep.as_str()) {
        let fields: Vec<&str> = segment.split(fmt.field_sep.as_str()).map(str::trim).collect();
        let parsed = match (fields.len() == arity, kind) {
            (false, _) => None,
            (true, RecordKind::Tripleset) => Record::triple(fields[0], fields[1], fields[2]).ok(),
            (true, RecordKind::MrSet) => Record::mr(fields[0], fields[1]).ok(),
        };
        match parsed {
            Some(r) if !fmt.collides(&r.fields().join(" ")) => records.push(r),
            _ => dropped += 1,
        }
    }
    if records.is_empty() {
        return Err(LinearizeError::EmptyOutput { dropped });
    }
    Ok(Delinearized {
        records: RecordSet::new(kind, records)?,
        dropped,
    })
}

/// Values a generated target must mention: subjects and objects of
/// triples, or the subject name plus every value of an MR set.
/// Deduplicated, in first-occurrence order. Predicates and keys are never
/// source values.
pub fn extract_source_values(rs: &RecordSet, fmt: &LinearFormat) -> Vec<String> {
    let mut values: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !values.iter().any(|seen| seen == v) {
            values.push(v.to_string());
        }
    };
    match rs.kind() {
        RecordKind::Tripleset => {
            for r in rs.records() {
                if let Record::Triple { subject, object, .. } = r {
                    push(subject);
                    push(object);
                }
            }
        }
        RecordKind::MrSet => {
            // ordering cannot fail for an MR set with a single subject pair;
            // fall back to record order if the set has several
            let ordered = rendering_order(rs, fmt).unwrap_or_else(|_| rs.records().iter().collect());
            for r in ordered {
                if let Record::Mr { value, .. } = r {
                    push(value);
                }
            }
        }
    }
    values
}
