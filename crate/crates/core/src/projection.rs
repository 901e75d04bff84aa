//! Projection of source entity labels onto target words.

use std::cmp::Ordering;

use crate::alignment::AlignmentLink;
use crate::corpus_io::EntitySpan;
use crate::tags::{EntityType, Tag};

/// Where a labeled target word's label came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub label: EntityType,
    pub alignment_score: f64,
    /// Index of the originating span in the sentence's span list.
    pub span: usize,
    /// Source word whose link carried the label.
    pub src_word: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedWord {
    pub tgt_index: usize,
    /// `None` means `O`.
    pub projection: Option<Projection>,
}

impl ProjectedWord {
    pub fn label(&self) -> Option<EntityType> {
        self.projection.map(|p| p.label)
    }
}

/// Higher score wins, then the smaller source word, then the label order
/// PER < ORG < LOC < MISC.
fn prefer(a: &Projection, b: &Projection) -> Ordering {
    b.alignment_score
        .total_cmp(&a.alignment_score)
        .then(a.src_word.cmp(&b.src_word))
        .then(a.label.cmp(&b.label))
        .then(a.span.cmp(&b.span))
}

/// Labels every target word linked to a word inside a source span. Links
/// pointing outside `tgt_len` are ignored.
pub fn project_tags(
    spans: &[EntitySpan],
    links: &[AlignmentLink],
    tgt_len: usize,
) -> Vec<ProjectedWord> {
    let mut best: Vec<Option<Projection>> = vec![None; tgt_len];
    for link in links {
        if link.tgt >= tgt_len {
            continue;
        }
        let Some(span) = spans.iter().position(|s| s.contains(link.src)) else {
            continue;
        };
        let candidate = Projection {
            label: spans[span].label,
            alignment_score: link.score,
            span,
            src_word: link.src,
        };
        let slot = &mut best[link.tgt];
        match slot {
            Some(cur) if prefer(cur, &candidate) != Ordering::Greater => {}
            _ => *slot = Some(candidate),
        }
    }
    best.into_iter()
        .enumerate()
        .map(|(tgt_index, projection)| ProjectedWord {
            tgt_index,
            projection,
        })
        .collect()
}

/// Converts projected labels to BIO. A run of adjacent words carrying the
/// same label from the same source span forms one entity.
pub fn to_bio(projected: &[ProjectedWord]) -> Vec<Tag> {
    let mut tags = Vec::with_capacity(projected.len());
    let mut prev: Option<(EntityType, usize)> = None;
    for word in projected {
        let cur = word.projection.map(|p| (p.label, p.span));
        let tag = match cur {
            None => Tag::Outside,
            Some((label, _)) if cur == prev => Tag::Inside(label),
            Some((label, _)) => Tag::Begin(label),
        };
        tags.push(tag);
        prev = cur;
    }
    tags
}

/// Source words inside some span that no link starts from, ascending.
pub fn check_entity_coverage(spans: &[EntitySpan], links: &[AlignmentLink]) -> Vec<usize> {
    spans
        .iter()
        .flat_map(|s| s.start..s.end)
        .filter(|&w| !links.iter().any(|l| l.src == w))
        .collect()
}

/// Source word indices covered by any span, ascending.
pub fn entity_words(spans: &[EntitySpan]) -> Vec<usize> {
    spans.iter().flat_map(|s| s.start..s.end).collect()
}
