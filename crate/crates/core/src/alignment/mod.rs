//! Word alignment from contextual embeddings.
//!
//! Stage one links words that are each other's most similar partner
//! (mutual argmax over word-level similarities). Entity words left
//! unlinked get a second chance from a maximum-weight matching over
//! subword similarities, projected back to words.

mod matching;

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus_io::EmbeddingSet;
use crate::error::{Error, Result};

pub use matching::max_weight_matching;

/// Lower clamp for normalized similarities; keeps `ln(score)` finite.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Pairwise similarities in `[0, 1]`, rows are source units and columns
/// target units (words or subwords).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Array2<f64>);

impl SimilarityMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("similarity {v} outside [0, 1]")));
        }
        Ok(SimilarityMatrix(values))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged similarity rows".into()));
        }
        let flat = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let values = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn get(&self, src: usize, tgt: usize) -> f64 {
        self.0[[src, tgt]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mutual,
    MatchFallback,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mutual => "mutual",
            Method::MatchFallback => "match_fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentLink {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
    pub method: Method,
}

impl AlignmentLink {
    /// Pharaoh-style `src-tgt:score:method`.
    pub fn pharaoh(&self) -> String {
        format!(
            "{}-{}:{:.6}:{}",
            self.src, self.tgt, self.score, self.method
        )
    }
}

/// Raw cosine similarities between every source and target row.
pub fn cosine_matrix(src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<Array2<f64>> {
    if src.level() != tgt.level() {
        return Err(Error::Shape(format!(
            "cannot compare {} with {} embeddings",
            src.level(),
            tgt.level()
        )));
    }
    if src.dim() != tgt.dim() {
        return Err(Error::Shape(format!(
            "embedding dimensions differ: {} vs {}",
            src.dim(),
            tgt.dim()
        )));
    }
    let a = l2_normalized(src.vectors())?;
    let b = l2_normalized(tgt.vectors())?;
    Ok(a.dot(&b.t()).mapv(|c| c.clamp(-1.0, 1.0)))
}

fn l2_normalized(vectors: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = vectors.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Invalid(format!(
                "vector {i} has zero or non-finite norm"
            )));
        }
        row /= norm;
    }
    Ok(out)
}

/// `(cos + 1) / 2`, clamped to `[epsilon, 1]`.
pub fn normalize_cosine(cos: f64, epsilon: f64) -> f64 {
    ((cos + 1.0) / 2.0).clamp(epsilon, 1.0)
}

pub fn similarity_matrix(src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<SimilarityMatrix> {
    similarity_matrix_with_floor(src, tgt, DEFAULT_EPSILON)
}

pub fn similarity_matrix_with_floor(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    epsilon: f64,
) -> Result<SimilarityMatrix> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Invalid(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let cos = cosine_matrix(src, tgt)?;
    Ok(SimilarityMatrix(cos.mapv(|c| normalize_cosine(c, epsilon))))
}

fn first_argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Pairs `(i, j)` where `j` is row `i`'s argmax and `i` is column `j`'s
/// argmax, ties going to the smaller index. Works on any real matrix.
pub fn mutual_argmax_pairs(values: ArrayView2<f64>) -> Vec<(usize, usize)> {
    let col_best: Vec<Option<usize>> = values
        .columns()
        .into_iter()
        .map(|c| first_argmax(c.iter().copied()))
        .collect();
    values
        .rows()
        .into_iter()
        .enumerate()
        .filter_map(|(i, row)| {
            let j = first_argmax(row.iter().copied())?;
            (col_best[j] == Some(i)).then_some((i, j))
        })
        .collect()
}

pub fn mutual_argmax_align(sim: &SimilarityMatrix) -> Vec<AlignmentLink> {
    mutual_argmax_pairs(sim.values())
        .into_iter()
        .map(|(src, tgt)| AlignmentLink {
            src,
            tgt,
            score: sim.get(src, tgt),
            method: Method::Mutual,
        })
        .collect()
}

pub fn solve_max_weight_matching(sim: &SimilarityMatrix) -> Vec<AlignmentLink> {
    max_weight_matching(sim.values())
        .into_iter()
        .map(|(src, tgt)| AlignmentLink {
            src,
            tgt,
            score: sim.get(src, tgt),
            method: Method::MatchFallback,
        })
        .collect()
}

/// Collapses subword links onto words. A word pair keeps the best score of
/// the subword links that map to it.
pub fn subword_to_word_links(
    links: &[AlignmentLink],
    src_map: &[usize],
    tgt_map: &[usize],
) -> Result<Vec<AlignmentLink>> {
    let mut best: BTreeMap<(usize, usize), AlignmentLink> = BTreeMap::new();
    for link in links {
        let (Some(&src), Some(&tgt)) = (src_map.get(link.src), tgt_map.get(link.tgt)) else {
            return Err(Error::Shape(format!(
                "subword link {}-{} outside word maps of length {} and {}",
                link.src,
                link.tgt,
                src_map.len(),
                tgt_map.len()
            )));
        };
        let candidate = AlignmentLink { src, tgt, ..*link };
        best.entry((src, tgt))
            .and_modify(|cur| {
                if candidate.score > cur.score {
                    *cur = candidate;
                }
            })
            .or_insert(candidate);
    }
    Ok(best.into_values().collect())
}

/// Source entity words with no outgoing link, ascending.
pub fn uncovered_words(entity_words: &[usize], links: &[AlignmentLink]) -> Vec<usize> {
    let mut out: Vec<usize> = entity_words
        .iter()
        .copied()
        .filter(|&w| !links.iter().any(|l| l.src == w))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Two-stage alignment for one sentence pair. Returns links sorted by
/// `(src, tgt)`.
pub fn align_pair(
    word_sim: &SimilarityMatrix,
    subword_sim: &SimilarityMatrix,
    src_map: &[usize],
    tgt_map: &[usize],
    entity_words: &[usize],
) -> Result<Vec<AlignmentLink>> {
    let (m, _) = word_sim.dim();
    if let Some(&w) = entity_words.iter().find(|&&w| w >= m) {
        return Err(Error::Shape(format!(
            "entity word {w} outside {m} source words"
        )));
    }
    if subword_sim.dim() != (src_map.len(), tgt_map.len()) {
        return Err(Error::Shape(format!(
            "subword similarity is {:?}, word maps have lengths {} and {}",
            subword_sim.dim(),
            src_map.len(),
            tgt_map.len()
        )));
    }

    let mut links = mutual_argmax_align(word_sim);
    let missing = uncovered_words(entity_words, &links);
    if missing.is_empty() {
        return Ok(links);
    }

    let fallback =
        subword_to_word_links(&solve_max_weight_matching(subword_sim), src_map, tgt_map)?;
    let mut taken: Vec<usize> = links.iter().map(|l| l.tgt).collect();
    for link in fallback {
        if missing.binary_search(&link.src).is_ok() && !taken.contains(&link.tgt) {
            taken.push(link.tgt);
            links.push(link);
        }
    }
    links.sort_by_key(|l| (l.src, l.tgt));
    Ok(links)
}
