//! JSON-Lines corpus input.
//!
//! One object per line: `{"id": ..., "question"?: ..., "code": ..., "answer"?: ...}`.
//! Lines that fail to parse as JSON, records missing required fields, and
//! duplicate ids are hard errors carrying the line number; snippets that are
//! merely syntactically invalid are *not* errors here — scoring routes them
//! to the reject stream.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::frontend::SourceUnit;

/// A corpus record plus its raw JSON object, preserved field-for-field so
/// outputs can carry the input through untouched.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub unit: SourceUnit,
    pub raw: Map<String, Value>,
    /// 1-based line in the input file.
    pub line: usize,
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>> {
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::Corpus {
            line: line_no,
            message: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let raw: Map<String, Value> = serde_json::from_str(&text).map_err(|e| Error::Corpus {
            line: line_no,
            message: format!("invalid JSON: {e}"),
        })?;
        let unit: SourceUnit =
            serde_json::from_value(Value::Object(raw.clone())).map_err(|e| Error::Corpus {
                line: line_no,
                message: format!("invalid record: {e}"),
            })?;
        if unit.id.is_empty() {
            return Err(Error::Corpus {
                line: line_no,
                message: "empty id".into(),
            });
        }
        if !seen_ids.insert(unit.id.clone()) {
            return Err(Error::Corpus {
                line: line_no,
                message: format!("duplicate id {:?}", unit.id),
            });
        }
        records.push(CorpusRecord {
            unit,
            raw,
            line: line_no,
        });
    }
    Ok(records)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}
