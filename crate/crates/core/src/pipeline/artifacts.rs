//! Intermediate JSON-lines files written between stages, one record per
//! sentence in corpus order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentLink;
use crate::corpus_io::{numbered_lines, open};
use crate::error::{Error, Result};
use crate::scoring::EntityRecord;
use crate::tags::Tag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: u64,
    pub links: Vec<AlignmentLink>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// No source entities; excluded before scoring.
    ZeroEntity,
    /// Some source entity word stayed unaligned; dropped.
    Uncovered,
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedRecord {
    pub id: u64,
    pub status: Status,
    pub tags: Vec<Tag>,
    pub entities: Vec<EntityRecord>,
    pub uncovered: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub id: u64,
    pub status: Status,
    pub tags: Vec<Tag>,
    /// Present only for projected sentences.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptRecord {
    pub id: u64,
    pub score: f64,
}

/// Locations of the stage artifacts, derived from the final output path by
/// appending a suffix (`weak.conll` → `weak.conll.links.jsonl`, …).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub links: PathBuf,
    pub projected: PathBuf,
    pub scored: PathBuf,
    pub kept: PathBuf,
}

impl ArtifactPaths {
    pub fn for_output(out: &Path) -> Self {
        let with = |suffix: &str| {
            let mut name = out.as_os_str().to_owned();
            name.push(suffix);
            PathBuf::from(name)
        };
        ArtifactPaths {
            links: with(".links.jsonl"),
            projected: with(".projected.jsonl"),
            scored: with(".scored.jsonl"),
            kept: with(".kept.jsonl"),
        }
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Invalid(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an artifact written by an earlier stage. A missing file is
/// reported as [`Error::MissingArtifact`].
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_owned()));
    }
    let mut out = Vec::new();
    for (line_no, line) in numbered_lines(open(path)?) {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::StaleArtifact {
            path: path.to_owned(),
            reason: format!("line {line_no}: {e}"),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Artifact ids must match the corpus ids, in order.
pub fn check_ids(path: &Path, artifact: impl Iterator<Item = u64>, corpus: &[u64]) -> Result<()> {
    let found: Vec<u64> = artifact.collect();
    if found != corpus {
        let reason = match found.iter().zip(corpus).position(|(a, b)| a != b) {
            Some(i) => format!(
                "record {} has id {}, corpus expects {}",
                i + 1,
                found[i],
                corpus[i]
            ),
            None => format!(
                "{} records for {} corpus sentences",
                found.len(),
                corpus.len()
            ),
        };
        return Err(Error::StaleArtifact {
            path: path.to_owned(),
            reason,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::Method;

    #[test]
    fn paths_append_suffixes() {
        let p = ArtifactPaths::for_output(Path::new("/tmp/out/weak.conll"));
        assert_eq!(p.links, Path::new("/tmp/out/weak.conll.links.jsonl"));
        assert_eq!(p.kept, Path::new("/tmp/out/weak.conll.kept.jsonl"));
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("links.jsonl");
        let records = vec![LinkRecord {
            id: 4,
            links: vec![AlignmentLink {
                src: 1,
                tgt: 2,
                score: 0.1 + 0.2,
                method: Method::MatchFallback,
            }],
        }];
        write_jsonl(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(r#""method":"match_fallback""#), "{text}");
        let back: Vec<LinkRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn missing_and_stale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nope.jsonl");
        assert!(matches!(
            read_jsonl::<KeptRecord>(&path),
            Err(Error::MissingArtifact(_))
        ));
        std::fs::write(&path, "{\"id\":1}\n").unwrap();
        assert!(matches!(
            read_jsonl::<KeptRecord>(&path),
            Err(Error::StaleArtifact { .. })
        ));
        let err = check_ids(&path, [0, 2].into_iter(), &[0, 1]).unwrap_err();
        assert!(err.to_string().contains("record 2 has id 2"), "{err}");
        assert!(check_ids(&path, [0].into_iter(), &[0, 1]).is_err());
        assert!(check_ids(&path, [0, 1].into_iter(), &[0, 1]).is_ok());
    }
}
