//! Sentence quality scores and top-fraction selection.
//!
//! A sentence with `k` entities scores `(1/k) Σ ln(align_i · ner_i)`, where
//! `align_i` is the entity's mean target-word alignment score and `ner_i`
//! the source tagger's confidence. Scores are never positive.

use serde::{Deserialize, Serialize};

use crate::corpus_io::WeakSentence;
use crate::error::{Error, Result};

/// Fraction of scored sentences kept by default.
pub const DEFAULT_KEEP_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub alignment_score: f64,
    pub ner_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence {
    pub weak: WeakSentence,
    pub entity_records: Vec<EntityRecord>,
}

impl ScoredSentence {
    /// Builds the weak sentence with its score computed from `entity_records`.
    pub fn new(
        id: u64,
        tgt_tokens: Vec<String>,
        tags: Vec<crate::tags::Tag>,
        entity_records: Vec<EntityRecord>,
    ) -> Result<Self> {
        let score = sentence_score(&entity_records)?;
        Ok(ScoredSentence {
            weak: WeakSentence::new(id, tgt_tokens, tags, score)?,
            entity_records,
        })
    }

    pub fn id(&self) -> u64 {
        self.weak.id
    }

    pub fn score(&self) -> f64 {
        self.weak.sentence_score
    }

    pub fn k(&self) -> usize {
        self.entity_records.len()
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} {v} outside (0, 1]")))
    }
}

/// Mean of an entity's per-word alignment scores.
pub fn entity_alignment_score(word_scores: &[f64]) -> Result<f64> {
    if word_scores.is_empty() {
        return Err(Error::Invalid("entity has no aligned words".into()));
    }
    for &s in word_scores {
        unit_interval("alignment score", s)?;
    }
    Ok(word_scores.iter().sum::<f64>() / word_scores.len() as f64)
}

pub fn sentence_score(records: &[EntityRecord]) -> Result<f64> {
    sentence_score_with(records, f64::ln)
}

/// Same as [`sentence_score`] with a caller-chosen logarithm.
pub fn sentence_score_with(records: &[EntityRecord], log: impl Fn(f64) -> f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::NoEntities);
    }
    let mut sum = 0.0;
    for r in records {
        unit_interval("alignment score", r.alignment_score)?;
        unit_interval("ner_score", r.ner_score)?;
        sum += log(r.alignment_score * r.ner_score);
    }
    Ok(sum / records.len() as f64)
}

/// `⌈fraction · n⌉`, ignoring floating-point dust just above an integer.
pub fn keep_count(fraction: f64, n: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Fraction(fraction));
    }
    let x = fraction * n as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok((count as usize).min(n))
}

/// Indices of the items to keep: best score first, smaller id on ties.
/// The result is ordered by id.
pub fn select_top(items: &[(u64, f64)], fraction: f64) -> Result<Vec<usize>> {
    let keep = keep_count(fraction, items.len())?;
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .1
            .total_cmp(&items[a].1)
            .then(items[a].0.cmp(&items[b].0))
    });
    order.truncate(keep);
    order.sort_by_key(|&i| items[i].0);
    Ok(order)
}

/// Splits sentences into `(kept, dropped)`, both ordered by id.
pub fn filter_top(
    sentences: Vec<ScoredSentence>,
    fraction: f64,
) -> Result<(Vec<ScoredSentence>, Vec<ScoredSentence>)> {
    let items: Vec<(u64, f64)> = sentences.iter().map(|s| (s.id(), s.score())).collect();
    let keep = select_top(&items, fraction)?;
    let mut flags = vec![false; sentences.len()];
    for i in keep {
        flags[i] = true;
    }
    let (mut kept, mut dropped): (Vec<_>, Vec<_>) = sentences
        .into_iter()
        .zip(flags)
        .partition(|(_, keep)| *keep);
    kept.sort_by_key(|(s, _)| s.id());
    dropped.sort_by_key(|(s, _)| s.id());
    Ok((
        kept.into_iter().map(|(s, _)| s).collect(),
        dropped.into_iter().map(|(s, _)| s).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::{EntityType, Tag};

    fn rec(alignment_score: f64, ner_score: f64) -> EntityRecord {
        EntityRecord {
            alignment_score,
            ner_score,
        }
    }

    #[test]
    fn entity_mean() {
        assert_eq!(entity_alignment_score(&[0.8]).unwrap(), 0.8);
        assert!((entity_alignment_score(&[0.8, 0.6]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(entity_alignment_score(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(entity_alignment_score(&[]).is_err());
        assert!(entity_alignment_score(&[0.0]).is_err());
    }

    #[test]
    fn score_hand_values() {
        assert_eq!(sentence_score(&[rec(1.0, 1.0)]).unwrap(), 0.0);
        let s = sentence_score(&[rec(0.8, 0.9), rec(0.5, 1.0)]).unwrap();
        assert!((s - -0.510826).abs() < 1e-6, "{s}");
        let s = sentence_score(&[rec(1e-6, 1.0)]).unwrap();
        assert!((s - -13.815511).abs() < 1e-6, "{s}");
    }

    #[test]
    fn score_errors() {
        assert!(matches!(sentence_score(&[]), Err(Error::NoEntities)));
        assert!(sentence_score(&[rec(1.1, 0.5)]).is_err());
        assert!(sentence_score(&[rec(0.5, 0.0)]).is_err());
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(0.4, 10).unwrap(), 4);
        assert_eq!(keep_count(0.4, 1).unwrap(), 1);
        assert_eq!(keep_count(0.4, 0).unwrap(), 0);
        assert_eq!(keep_count(1.0, 7).unwrap(), 7);
        assert_eq!(keep_count(0.1, 30).unwrap(), 3);
        assert!(keep_count(0.0, 5).is_err());
        assert!(keep_count(1.5, 5).is_err());
        assert!(keep_count(f64::NAN, 5).is_err());
    }

    fn scored(id: u64, score_input: f64) -> ScoredSentence {
        ScoredSentence::new(
            id,
            vec!["x".into()],
            vec![Tag::Begin(EntityType::Per)],
            vec![rec(score_input, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn top_forty_percent() {
        let sentences: Vec<_> = (0..10)
            .map(|i| scored(i, 0.05 + 0.09 * ((i * 7) % 10) as f64))
            .collect();
        let mut by_score: Vec<_> = sentences.iter().map(|s| (s.score(), s.id())).collect();
        by_score.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut expected: Vec<u64> = by_score[..4].iter().map(|p| p.1).collect();
        expected.sort();
        let (kept, dropped) = filter_top(sentences, 0.4).unwrap();
        assert_eq!(
            kept.iter().map(ScoredSentence::id).collect::<Vec<_>>(),
            expected
        );
        assert_eq!(dropped.len(), 6);
    }

    #[test]
    fn single_sentence_is_kept() {
        let (kept, dropped) = filter_top(vec![scored(3, 0.5)], 0.4).unwrap();
        assert_eq!(kept.len(), 1);
        assert!(dropped.is_empty());
    }

    #[test]
    fn boundary_tie_prefers_smaller_id() {
        // N=2, keep 1; both tied
        let (kept, dropped) = filter_top(vec![scored(9, 0.5), scored(4, 0.5)], 0.4).unwrap();
        assert_eq!(kept[0].id(), 4);
        assert_eq!(dropped[0].id(), 9);
    }

    #[test]
    fn fraction_out_of_range() {
        assert!(matches!(filter_top(vec![], 0.0), Err(Error::Fraction(_))));
        assert!(filter_top(vec![], 1.01).is_err());
    }
}
