//! Corpus loaders: DART-style JSON and E2E-style CSV.
//!
//! Loaders never fail on a single bad entry. They skip it and explain why in
//! [`DatasetSplit::load_warnings`]; only an unreadable file or a document
//! that is not the expected container is an error.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::linearize::{has_subject_pair, LinearFormat};
use crate::record::{Example, Record, RecordKind, RecordSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub examples: Vec<Example>,
    pub load_warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0} split has no usable examples")]
    Empty(SplitName),
}

impl DatasetSplit {
    pub fn kind(&self) -> Option<RecordKind> {
        self.examples.first().map(|e| e.source.kind())
    }

    pub fn require_non_empty(&self) -> Result<(), LoadError> {
        if self.examples.is_empty() {
            Err(LoadError::Empty(self.name))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Dart,
    E2e,
}

pub fn load(path: &Path, format: DatasetFormat, name: SplitName) -> Result<DatasetSplit, LoadError> {
    match format {
        DatasetFormat::Dart => load_dart(path, name),
        DatasetFormat::E2e => load_e2e(path, name),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, LoadError> {
    File::open(path).map(BufReader::new).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dart(path: &Path, name: SplitName) -> Result<DatasetSplit, LoadError> {
    let value: Value = serde_json::from_reader(open(path)?).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dart(&value, name).map_err(|message| LoadError::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// Reads an already-parsed DART document: an array of entries, each with a
/// `tripleset` of `[s, p, o]` lists and `annotations` carrying `text`.
/// Every annotation becomes its own example.
pub fn parse_dart(doc: &Value, name: SplitName) -> Result<DatasetSplit, String> {
    let entries = doc.as_array().ok_or("top level is not a JSON array")?;
    let mut examples = Vec::new();
    let mut warnings = Vec::new();
    let mut expanded = 0usize;

    for (i, entry) in entries.iter().enumerate() {
        let source = match dart_tripleset(entry) {
            Ok(rs) => rs,
            Err(why) => {
                warnings.push(format!("entry {i}: {why}; skipped"));
                continue;
            }
        };
        let texts: Vec<&str> = entry
            .get("annotations")
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(|an| an.get("text").and_then(Value::as_str))
                    .collect()
            })
            .unwrap_or_default();
        if texts.is_empty() {
            warnings.push(format!("entry {i}: no annotation text; skipped"));
            continue;
        }
        if texts.len() > 1 {
            expanded += 1;
        }
        for (j, text) in texts.into_iter().enumerate() {
            match Example::new(source.clone(), text) {
                Ok(ex) => examples.push(ex),
                Err(e) => warnings.push(format!("entry {i} annotation {j}: {e}; skipped")),
            }
        }
    }
    if expanded > 0 {
        warnings.push(format!(
            "{expanded} entries carry several annotations; each annotation was loaded as a separate example"
        ));
    }
    Ok(DatasetSplit {
        name,
        examples,
        load_warnings: warnings,
    })
}

fn dart_tripleset(entry: &Value) -> Result<RecordSet, String> {
    parse_tripleset(entry.get("tripleset").ok_or("missing tripleset")?)
}

/// Reads a `[[s, p, o], ...]` JSON list.
pub fn parse_tripleset(value: &Value) -> Result<RecordSet, String> {
    let triples = value.as_array().ok_or("tripleset is not a list")?;
    if triples.is_empty() {
        return Err("empty tripleset".into());
    }
    let mut records = Vec::with_capacity(triples.len());
    for (k, t) in triples.iter().enumerate() {
        let fields: Vec<&str> = t
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        let [s, p, o] = fields[..] else {
            return Err(format!("triple {k} is not three strings"));
        };
        records.push(Record::triple(s, p, o).map_err(|e| format!("triple {k}: {e}"))?);
    }
    RecordSet::new(RecordKind::Tripleset, records).map_err(|e| e.to_string())
}

/// Splits `name[The Golden Curry], food[English]` into key/value pairs.
/// A value runs to its matching close bracket, so values may contain commas
/// and balanced brackets.
pub fn parse_mr(text: &str) -> Result<Vec<(String, String)>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pairs = Vec::new();
    let mut i = 0;
    loop {
        while i < chars.len() && (chars[i].is_whitespace() || chars[i] == ',') {
            i += 1;
        }
        if i == chars.len() {
            break;
        }
        let key_start = i;
        while i < chars.len() && chars[i] != '[' {
            if chars[i] == ']' || chars[i] == ',' {
                return Err(format!("unexpected '{}' in key at {i}", chars[i]));
            }
            i += 1;
        }
        if i == chars.len() {
            return Err(format!("key at {key_start} has no '['"));
        }
        let key: String = chars[key_start..i].iter().collect::<String>().trim().to_string();
        if key.is_empty() {
            return Err(format!("empty key at {key_start}"));
        }
        i += 1;
        let value_start = i;
        let mut depth = 1;
        while i < chars.len() {
            match chars[i] {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                _ => {}
            }
            i += 1;
        }
        if depth != 0 {
            return Err(format!("unclosed '[' after key {key:?}"));
        }
        pairs.push((key, chars[value_start..i].iter().collect()));
        i += 1;
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i < chars.len() && chars[i] != ',' {
            return Err(format!("expected ',' at {i}"));
        }
    }
    if pairs.is_empty() {
        return Err("no key[value] pairs".into());
    }
    Ok(pairs)
}

/// The inverse of [`parse_tripleset`].
pub fn tripleset_json(rs: &RecordSet) -> Value {
    Value::Array(
        rs.records()
            .iter()
            .map(|r| Value::Array(r.fields().into_iter().map(|f| Value::String(f.into())).collect()))
            .collect(),
    )
}

/// Parses an MR string straight into a record set.
pub fn parse_mr_set(text: &str) -> Result<RecordSet, String> {
    let mut ignored = Vec::new();
    mr_set(parse_mr(text)?, &mut ignored, 0)
}

/// `name[X], food[Y]`, the inverse of [`parse_mr`].
pub fn format_mr(rs: &RecordSet) -> String {
    rs.records()
        .iter()
        .map(|r| {
            let f = r.fields();
            format!("{}[{}]", f[0], f[f.len() - 1])
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds an MR set from parsed pairs. Empty values are skipped (with a
/// note in `warnings`), since a record cannot have an empty field.
fn mr_set(pairs: Vec<(String, String)>, warnings: &mut Vec<String>, row: usize) -> Result<RecordSet, String> {
    let mut records = Vec::with_capacity(pairs.len());
    for (key, value) in pairs {
        if value.trim().is_empty() {
            warnings.push(format!("row {row}: empty value for {key:?} dropped"));
            continue;
        }
        records.push(Record::mr(&key, &value).map_err(|e| e.to_string())?);
    }
    RecordSet::new(RecordKind::MrSet, records).map_err(|e| e.to_string())
}

pub fn load_e2e(path: &Path, name: SplitName) -> Result<DatasetSplit, LoadError> {
    let mut raw = String::new();
    open(path)?.read_to_string(&mut raw).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_e2e(&raw, name).map_err(|message| LoadError::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// Reads E2E CSV text. The header must name an `mr` and a `ref` column
/// (case-insensitive); other columns are ignored. Rows are numbered from 1,
/// not counting the header.
pub fn parse_e2e(csv_text: &str, name: SplitName) -> Result<DatasetSplit, String> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| format!("bad header: {e}"))?.clone();
    let column = |want: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(want))
            .ok_or_else(|| format!("header has no {want:?} column"))
    };
    let (mr_col, ref_col) = (column("mr")?, column("ref")?);
    let fmt = LinearFormat::default();

    let mut examples = Vec::new();
    let mut warnings = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("row {row_no}: malformed CSV ({e}); skipped"));
                continue;
            }
        };
        let target = row.get(ref_col).unwrap_or("").trim();
        if target.is_empty() {
            warnings.push(format!("row {row_no}: missing ref; skipped"));
            continue;
        }
        let mr = row.get(mr_col).unwrap_or("");
        let source = match parse_mr(mr).and_then(|pairs| mr_set(pairs, &mut warnings, row_no)) {
            Ok(rs) => rs,
            Err(e) => {
                warnings.push(format!("row {row_no}: unparseable mr ({e}); skipped"));
                continue;
            }
        };
        if !has_subject_pair(&source, &fmt) {
            warnings.push(format!(
                "row {row_no}: no {:?} MR; the first pair stands in as the subject",
                fmt.subject_key
            ));
        }
        match Example::new(source, target) {
            Ok(ex) => examples.push(ex),
            Err(e) => warnings.push(format!("row {row_no}: {e}; skipped")),
        }
    }
    Ok(DatasetSplit {
        name,
        examples,
        load_warnings: warnings,
    })
}
