use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::error::{Error, Result};

use super::{numbered_lines, open, with_path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Src => "src",
            Side::Tgt => "tgt",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Word,
    Subword,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Word => "word",
            Level::Subword => "subword",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Contextual vectors for one side of one sentence.
///
/// At subword level `word_map[k]` is the word that subword `k` belongs to.
/// The map is monotone, starts at 0 and never skips a word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    level: Level,
    vectors: Array2<f64>,
    word_map: Option<Vec<usize>>,
}

impl EmbeddingSet {
    pub fn new(level: Level, vectors: Array2<f64>, word_map: Option<Vec<usize>>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::Invalid("embedding matrix is empty".into()));
        }
        for (i, row) in vectors.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("row {i} has a non-finite value")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::Invalid(format!("row {i} has zero norm")));
            }
        }
        match (level, &word_map) {
            (Level::Word, Some(_)) => {
                return Err(Error::Invalid(
                    "word-level record carries a word_map".into(),
                ))
            }
            (Level::Subword, None) => {
                return Err(Error::Invalid(
                    "subword-level record lacks a word_map".into(),
                ))
            }
            (Level::Subword, Some(map)) => {
                if map.len() != vectors.nrows() {
                    return Err(Error::Invalid(format!(
                        "word_map has {} entries for {} vectors",
                        map.len(),
                        vectors.nrows()
                    )));
                }
                check_word_map(map)?;
            }
            (Level::Word, None) => {}
        }
        Ok(EmbeddingSet {
            level,
            vectors,
            word_map,
        })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn word_map(&self) -> Option<&[usize]> {
        self.word_map.as_deref()
    }

    /// Number of words covered: rows at word level, `max(word_map) + 1` at
    /// subword level.
    pub fn word_count(&self) -> usize {
        match &self.word_map {
            Some(map) => map.last().map_or(0, |&w| w + 1),
            None => self.vectors.nrows(),
        }
    }

    /// Cross-checks against the tokenized sentence.
    pub fn check_word_count(&self, words: usize) -> Result<()> {
        if self.word_count() != words {
            return Err(Error::Invalid(format!(
                "{}-level embeddings cover {} words, sentence has {words}",
                self.level,
                self.word_count()
            )));
        }
        Ok(())
    }
}

fn check_word_map(map: &[usize]) -> Result<()> {
    let mut expected_max = 0usize;
    for (k, &w) in map.iter().enumerate() {
        let ok = if k == 0 {
            w == 0
        } else {
            w == expected_max || w == expected_max + 1
        };
        if !ok {
            return Err(Error::Invalid(format!(
                "word_map is not monotone and gap-free at subword {k}: {map:?}"
            )));
        }
        expected_max = w;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: u64,
    side: Side,
    level: Level,
    vectors: Vec<Vec<f64>>,
    #[serde(default)]
    word_map: Option<Vec<usize>>,
}

pub fn read_embeddings(path: &Path) -> Result<BTreeMap<(u64, Side), EmbeddingSet>> {
    with_path(path, parse_embeddings(open(path)?))
}

pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<BTreeMap<(u64, Side), EmbeddingSet>> {
    let mut out = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (line_no, line) in numbered_lines(reader) {
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let rows = record.vectors.len();
        let cols = record.vectors.first().map_or(0, Vec::len);
        if let Some(r) = record.vectors.iter().position(|v| v.len() != cols) {
            return Err(Error::parse(
                line_no,
                format!(
                    "dimension mismatch: row {r} has {} values, expected {cols}",
                    record.vectors[r].len()
                ),
            ));
        }
        match dim {
            Some(d) if d != cols => {
                return Err(Error::parse(
                    line_no,
                    format!("dimension mismatch: {cols} here, {d} earlier in the file"),
                ))
            }
            _ => dim = Some(cols),
        }
        let flat: Vec<f64> = record.vectors.into_iter().flatten().collect();
        let vectors = Array2::from_shape_vec((rows, cols), flat)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let set = EmbeddingSet::new(record.level, vectors, record.word_map)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        if out.insert((record.id, record.side), set).is_some() {
            return Err(Error::parse(
                line_no,
                format!("duplicate record for id={} side={}", record.id, record.side),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize, d: usize) -> String {
        let row = format!("[{}]", vec!["0.5"; d].join(","));
        format!("[{}]", vec![row; n].join(","))
    }

    #[test]
    fn word_level() {
        let line = format!(
            r#"{{"id":0,"side":"src","level":"word","vectors":{},"word_map":null}}"#,
            rows(4, 8)
        );
        let map = parse_embeddings(line.as_bytes()).unwrap();
        let set = &map[&(0, Side::Src)];
        assert_eq!(set.level(), Level::Word);
        assert_eq!(set.vectors().dim(), (4, 8));
        assert_eq!(set.word_count(), 4);
    }

    #[test]
    fn subword_level() {
        let line = format!(
            r#"{{"id":0,"side":"tgt","level":"subword","vectors":{},"word_map":[0,0,1,2,3,3]}}"#,
            rows(6, 3)
        );
        let map = parse_embeddings(line.as_bytes()).unwrap();
        let set = &map[&(0, Side::Tgt)];
        assert_eq!(set.word_count(), 4);
        assert!(set.check_word_count(4).is_ok());
        assert!(set.check_word_count(5).is_err());
    }

    #[test]
    fn non_monotone_word_map() {
        let line = format!(
            r#"{{"id":0,"side":"src","level":"subword","vectors":{},"word_map":[0,2,1]}}"#,
            rows(3, 2)
        );
        let err = parse_embeddings(line.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("monotone"), "{err}");
    }

    #[test]
    fn dimension_mismatch() {
        let line = r#"{"id":0,"side":"src","level":"word","vectors":[[1,2],[1,2,3]]}"#;
        assert!(parse_embeddings(line.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("dimension mismatch"));
        let two = format!(
            "{}\n{}",
            r#"{"id":0,"side":"src","level":"word","vectors":[[1,2]]}"#,
            r#"{"id":0,"side":"tgt","level":"word","vectors":[[1,2,3]]}"#
        );
        let err = parse_embeddings(two.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_finite_and_zero_rows() {
        let set = EmbeddingSet::new(
            Level::Word,
            Array2::from_shape_vec((1, 2), vec![f64::NAN, 1.0]).unwrap(),
            None,
        );
        assert!(set.unwrap_err().to_string().contains("non-finite"));
        // serde_json rejects overflowing literals, which is also an error
        let line = r#"{"id":0,"side":"src","level":"word","vectors":[[1e400,1]]}"#;
        assert!(parse_embeddings(line.as_bytes()).is_err());
        let line = r#"{"id":0,"side":"src","level":"word","vectors":[[0,0]]}"#;
        assert!(parse_embeddings(line.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("zero norm"));
    }

    #[test]
    fn level_and_map_must_agree() {
        let line = r#"{"id":0,"side":"src","level":"word","vectors":[[1,0]],"word_map":[0]}"#;
        assert!(parse_embeddings(line.as_bytes()).is_err());
        let line = r#"{"id":0,"side":"src","level":"subword","vectors":[[1,0]]}"#;
        assert!(parse_embeddings(line.as_bytes()).is_err());
        let line = r#"{"id":0,"side":"src","level":"subword","vectors":[[1,0]],"word_map":[0,1]}"#;
        assert!(parse_embeddings(line.as_bytes()).is_err());
    }
}
