use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::EntityType;

use super::{numbered_lines, open, with_path};

/// A source-side entity over the half-open word range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: EntityType,
    /// Tagger confidence for the whole span, in (0, 1].
    #[serde(rename = "score")]
    pub ner_score: f64,
}

impl EntitySpan {
    pub fn contains(&self, word: usize) -> bool {
        (self.start..self.end).contains(&word)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.start >= self.end {
            return Err(format!("empty span [{}, {})", self.start, self.end));
        }
        if !(self.ner_score > 0.0 && self.ner_score <= 1.0) {
            return Err(format!("ner_score out of range: {}", self.ner_score));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: u64,
    spans: Vec<EntitySpan>,
}

/// Reads one JSON record per sentence. Sentences without a record have no
/// entities; look them up with [`spans_for`].
pub fn read_source_annotations(path: &Path) -> Result<BTreeMap<u64, Vec<EntitySpan>>> {
    with_path(path, parse_source_annotations(open(path)?))
}

pub fn parse_source_annotations<R: BufRead>(reader: R) -> Result<BTreeMap<u64, Vec<EntitySpan>>> {
    let mut out = BTreeMap::new();
    for (line_no, line) in numbered_lines(reader) {
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let mut spans = record.spans;
        for span in &spans {
            span.validate().map_err(|m| Error::parse(line_no, m))?;
        }
        spans.sort_by_key(|s| (s.start, s.end));
        if let Some(w) = spans.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(Error::parse(
                line_no,
                format!(
                    "overlapping spans [{}, {}) and [{}, {})",
                    w[0].start, w[0].end, w[1].start, w[1].end
                ),
            ));
        }
        if out.insert(record.id, spans).is_some() {
            return Err(Error::parse(line_no, format!("duplicate id {}", record.id)));
        }
    }
    Ok(out)
}

pub fn spans_for(annotations: &BTreeMap<u64, Vec<EntitySpan>>, id: u64) -> &[EntitySpan] {
    annotations.get(&id).map(Vec::as_slice).unwrap_or(&[])
}

/// Checks that every span fits inside a source sentence of `len` words.
pub fn check_span_bounds(spans: &[EntitySpan], len: usize) -> Result<()> {
    match spans.iter().find(|s| s.end > len) {
        Some(s) => Err(Error::Invalid(format!(
            "span [{}, {}) exceeds source length {len}",
            s.start, s.end
        ))),
        None => Ok(()),
    }
}
