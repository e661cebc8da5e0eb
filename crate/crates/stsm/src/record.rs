//! Shared domain types: records, record sets, examples, self-memory tuples
//! and training pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{fold, normalize_text};

/// Separator placed between records in a linearized string.
pub const RECORD_SEP: &str = " | ";
/// Separator placed between the fields of one record.
pub const FIELD_SEP: &str = " : ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("empty {field} field")]
    EmptyField { field: &'static str },
    #[error("{field} field {value:?} contains a reserved separator (\" | \" or \" : \")")]
    ReservedSeparator { field: &'static str, value: String },
    #[error("cannot compare a {left} record with a {right} record")]
    VariantMismatch { left: RecordKind, right: RecordKind },
    #[error("a record set needs at least one record")]
    EmptySet,
    #[error("record {index} is a {found} but the set holds {expected} records")]
    MixedKinds {
        index: usize,
        expected: RecordKind,
        found: RecordKind,
    },
    #[error("target text is empty")]
    EmptyTarget,
}

/// Which of the two dataset shapes a record (or set) has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// `(subject, predicate, object)` triples, as in DART.
    Tripleset,
    /// `key[value]` meaning representations, as in E2E.
    MrSet,
}

impl std::fmt::Display for RecordKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordKind::Tripleset => f.write_str("triple"),
            RecordKind::MrSet => f.write_str("MR"),
        }
    }
}

/// One triple or one MR key-value pair. Fields are stored normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Triple {
        subject: String,
        predicate: String,
        object: String,
    },
    Mr {
        key: String,
        value: String,
    },
}

/// Normalizes a field and rejects it if it is empty or could be confused
/// with a separator once surrounded by the separators' padding spaces.
fn checked_field(raw: &str, field: &'static str) -> Result<String, RecordError> {
    let value = normalize_text(raw);
    if value.is_empty() {
        return Err(RecordError::EmptyField { field });
    }
    let padded = format!(" {value} ");
    if padded.contains(RECORD_SEP) || padded.contains(FIELD_SEP) {
        return Err(RecordError::ReservedSeparator { field, value });
    }
    Ok(value)
}

impl Record {
    pub fn triple(subject: &str, predicate: &str, object: &str) -> Result<Self, RecordError> {
        Ok(Record::Triple {
            subject: checked_field(subject, "subject")?,
            predicate: checked_field(predicate, "predicate")?,
            object: checked_field(object, "object")?,
        })
    }

    pub fn mr(key: &str, value: &str) -> Result<Self, RecordError> {
        Ok(Record::Mr {
            key: checked_field(key, "key")?,
            value: checked_field(value, "value")?,
        })
    }

    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Triple { .. } => RecordKind::Tripleset,
            Record::Mr { .. } => RecordKind::MrSet,
        }
    }

    /// Fields in rendering order.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            Record::Triple {
                subject,
                predicate,
                object,
            } => vec![subject, predicate, object],
            Record::Mr { key, value } => vec![key, value],
        }
    }

    /// Key under which two records compare equal iff [`record_eq`] holds.
    pub fn match_key(&self, strict: bool) -> MatchKey {
        MatchKey {
            kind: self.kind(),
            fields: self.fields().iter().map(|f| fold(f, strict)).collect(),
        }
    }
}

/// Hashable projection of a record used for set comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchKey {
    kind: RecordKind,
    fields: Vec<String>,
}

/// Field-wise equality after whitespace normalization and, unless
/// `strict`, case-folding.
pub fn record_eq(a: &Record, b: &Record, strict: bool) -> Result<bool, RecordError> {
    if a.kind() != b.kind() {
        return Err(RecordError::VariantMismatch {
            left: a.kind(),
            right: b.kind(),
        });
    }
    Ok(a.match_key(strict) == b.match_key(strict))
}

/// A non-empty, kind-homogeneous, ordered list of records.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordSet {
    kind: RecordKind,
    records: Vec<Record>,
}

impl RecordSet {
    pub fn new(kind: RecordKind, records: Vec<Record>) -> Result<Self, RecordError> {
        if records.is_empty() {
            return Err(RecordError::EmptySet);
        }
        if let Some((index, r)) = records.iter().enumerate().find(|(_, r)| r.kind() != kind) {
            return Err(RecordError::MixedKinds {
                index,
                expected: kind,
                found: r.kind(),
            });
        }
        Ok(RecordSet { kind, records })
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A source record set with its linearization and a gold target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub source: RecordSet,
    pub source_text: String,
    pub target: String,
}

impl Example {
    /// Builds an example, deriving `source_text` with the default format.
    pub fn new(source: RecordSet, target: &str) -> Result<Self, crate::linearize::LinearizeError> {
        let source_text = crate::linearize::linearize(&source, &Default::default())?;
        let target = normalize_text(target);
        if target.is_empty() {
            return Err(RecordError::EmptyTarget.into());
        }
        Ok(Example {
            source,
            source_text,
            target,
        })
    }
}

/// Per-example, per-epoch self-memory: `(x, y, y′, x′, y″, x″)`.
///
/// Model outputs that could not be produced or parsed are `None`, never
/// empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfMemTuple {
    pub x: RecordSet,
    pub y: String,
    pub y_prime: Option<String>,
    pub x_prime: Option<RecordSet>,
    pub y_dprime: Option<String>,
    pub x_dprime: Option<RecordSet>,
}

/// Where a training pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Gold,
    SelfMemoryYPrime,
    SelfMemoryYDoublePrime,
    Remaining,
}

impl Origin {
    pub fn is_self_memory(self) -> bool {
        matches!(self, Origin::SelfMemoryYPrime | Origin::SelfMemoryYDoublePrime)
    }
}

/// A source/target training pair. The origin is fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub source_text: String,
    pub target_text: String,
    origin: Origin,
}

impl Pair {
    pub fn new(source_text: impl Into<String>, target_text: impl Into<String>, origin: Origin) -> Self {
        Pair {
            source_text: source_text.into(),
            target_text: target_text.into(),
            origin,
        }
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// The `(target, source)` pair used to train the text-to-data model.
    pub fn swapped(&self) -> (String, String) {
        (self.target_text.clone(), self.source_text.clone())
    }
}
