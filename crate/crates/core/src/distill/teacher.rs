use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::corpus_io::{numbered_lines, open, with_path};
use crate::error::{Error, Result};
use crate::tags::NUM_TAGS;

use super::TagDistribution;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: u64,
    probs: Vec<Vec<f64>>,
}

/// Reads teacher distributions, one `{"id":…,"probs":[[…9 floats…],…]}`
/// record per sentence.
pub fn read_teacher(path: &Path) -> Result<BTreeMap<u64, TagDistribution>> {
    with_path(path, parse_teacher(open(path)?))
}

pub fn parse_teacher<R: BufRead>(reader: R) -> Result<BTreeMap<u64, TagDistribution>> {
    let mut out = BTreeMap::new();
    for (line_no, line) in numbered_lines(reader) {
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if let Some(row) = record.probs.iter().position(|r| r.len() != NUM_TAGS) {
            return Err(Error::parse(
                line_no,
                format!(
                    "token {row}: expected {NUM_TAGS} probabilities, found {}",
                    record.probs[row].len()
                ),
            ));
        }
        let tokens = record.probs.len();
        let flat = record.probs.into_iter().flatten().collect();
        let probs = Array2::from_shape_vec((tokens, NUM_TAGS), flat)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let dist = TagDistribution::new(probs).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if out.insert(record.id, dist).is_some() {
            return Err(Error::parse(line_no, format!("duplicate id {}", record.id)));
        }
    }
    Ok(out)
}
