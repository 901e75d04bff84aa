//! End-to-end weak data generation: align, project, score, filter, write.
//!
//! [`run_generate`] runs everything in memory. [`run_stage`] runs one step
//! and persists its result next to the output file (see
//! [`ArtifactPaths`]), so the steps can be resumed and inspected. Both
//! paths share the per-step functions below and produce byte-identical
//! CoNLL.

mod artifacts;
mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::alignment::{align_pair, similarity_matrix_with_floor, AlignmentLink};
use crate::corpus_io::{
    check_span_bounds, read_embeddings, read_parallel, read_source_annotations, spans_for,
    write_conll, EmbeddingSet, EntitySpan, Level, SentencePair, Side, WeakSentence,
};
use crate::distill::{gradient_check, GradCheckReport};
use crate::error::{Error, Result};
use crate::projection::{check_entity_coverage, entity_words, project_tags, to_bio};
use crate::scoring::{entity_alignment_score, select_top, EntityRecord, ScoredSentence};
use crate::tags::Tag;

pub use artifacts::{
    check_ids, read_jsonl, write_jsonl, ArtifactPaths, KeptRecord, LinkRecord, ProjectedRecord,
    ScoredRecord, Status,
};
pub use config::PipelineConfig;

/// Gradient checks at or above this relative error fail `distill-check`.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Align,
    Project,
    Score,
    Filter,
    DistillCheck,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Align => "align",
            Stage::Project => "project",
            Stage::Score => "score",
            Stage::Filter => "filter",
            Stage::DistillCheck => "distill-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub read: usize,
    pub zero_entity: usize,
    pub dropped_uncovered: usize,
    pub scored: usize,
    pub kept: usize,
    /// Mean score over all scored sentences.
    pub mean_score: Option<f64>,
    pub mean_kept_score: Option<f64>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mean = |m: Option<f64>| m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "sentences read:        {}", self.read)?;
        writeln!(f, "zero-entity excluded:  {}", self.zero_entity)?;
        writeln!(f, "dropped (uncovered):   {}", self.dropped_uncovered)?;
        writeln!(f, "scored:                {}", self.scored)?;
        writeln!(f, "kept:                  {}", self.kept)?;
        writeln!(f, "mean sentence score:   {}", mean(self.mean_score))?;
        write!(f, "mean kept score:       {}", mean(self.mean_kept_score))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageReport {
    Artifact {
        path: PathBuf,
        records: usize,
    },
    Filtered {
        out: PathBuf,
        kept_ids: PathBuf,
        summary: Summary,
    },
    GradCheck(GradCheckReport),
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageReport::Artifact { path, records } => {
                write!(f, "wrote {records} records to {}", path.display())
            }
            StageReport::Filtered {
                out,
                kept_ids,
                summary,
            } => write!(
                f,
                "{summary}\nwrote {} and {}",
                out.display(),
                kept_ids.display()
            ),
            StageReport::GradCheck(r) => write!(
                f,
                "checked {} entries over {} instances\nmax relative error: {:.3e}",
                r.entries, r.instances, r.max_relative_error
            ),
        }
    }
}

/// Parallel corpus plus validated source spans restricted to the
/// configured tag set.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub pairs: Vec<SentencePair>,
    pub annotations: BTreeMap<u64, Vec<EntitySpan>>,
}

impl Corpus {
    pub fn ids(&self) -> Vec<u64> {
        self.pairs.iter().map(|p| p.id).collect()
    }

    pub fn spans(&self, id: u64) -> &[EntitySpan] {
        spans_for(&self.annotations, id)
    }
}

pub fn load_corpus(config: &PipelineConfig) -> Result<Corpus> {
    let pairs = read_parallel(config.require(&config.corpus, "corpus")?)?;
    let mut annotations =
        read_source_annotations(config.require(&config.annotations, "annotations")?)?;
    let lengths: BTreeMap<u64, usize> = pairs.iter().map(|p| (p.id, p.src_tokens.len())).collect();
    for (id, spans) in annotations.iter_mut() {
        let len = lengths.get(id).ok_or_else(|| {
            Error::Invalid(format!(
                "annotations for id={id}, which is not in the corpus"
            ))
        })?;
        check_span_bounds(spans, *len).map_err(|e| Error::Invalid(format!("id={id}: {e}")))?;
        spans.retain(|s| config.tag_set.contains(&s.label));
    }
    Ok(Corpus { pairs, annotations })
}

/// Embedding records keyed by sentence id and side.
type EmbeddingTable = BTreeMap<(u64, Side), EmbeddingSet>;

fn embeddings_for(
    table: &EmbeddingTable,
    id: u64,
    side: Side,
    level: Level,
    words: usize,
) -> Result<&EmbeddingSet> {
    let set = table.get(&(id, side)).ok_or(Error::MissingEmbeddings {
        id,
        side: side.as_str(),
        level: level.as_str(),
    })?;
    if set.level() != level {
        return Err(Error::Invalid(format!(
            "id={id} side={side}: expected {level} embeddings, found {}",
            set.level()
        )));
    }
    set.check_word_count(words)
        .map_err(|e| Error::Invalid(format!("id={id} side={side}: {e}")))?;
    Ok(set)
}

fn align_one(
    pair: &SentencePair,
    spans: &[EntitySpan],
    word_emb: &EmbeddingTable,
    subword_emb: &EmbeddingTable,
    epsilon: f64,
) -> Result<LinkRecord> {
    let (m, n) = (pair.src_tokens.len(), pair.tgt_tokens.len());
    let src_w = embeddings_for(word_emb, pair.id, Side::Src, Level::Word, m)?;
    let tgt_w = embeddings_for(word_emb, pair.id, Side::Tgt, Level::Word, n)?;
    let src_s = embeddings_for(subword_emb, pair.id, Side::Src, Level::Subword, m)?;
    let tgt_s = embeddings_for(subword_emb, pair.id, Side::Tgt, Level::Subword, n)?;
    let context = |e: Error| Error::Invalid(format!("id={}: {e}", pair.id));
    let word_sim = similarity_matrix_with_floor(src_w, tgt_w, epsilon).map_err(context)?;
    let subword_sim = similarity_matrix_with_floor(src_s, tgt_s, epsilon).map_err(context)?;
    let links = align_pair(
        &word_sim,
        &subword_sim,
        src_s.word_map().unwrap_or_default(),
        tgt_s.word_map().unwrap_or_default(),
        &entity_words(spans),
    )
    .map_err(context)?;
    Ok(LinkRecord { id: pair.id, links })
}

/// Aligns every sentence pair. Sentences are processed in parallel and
/// returned in corpus order; the first failing sentence in corpus order
/// determines the error.
pub fn align_corpus(
    corpus: &Corpus,
    word_emb: &EmbeddingTable,
    subword_emb: &EmbeddingTable,
    epsilon: f64,
) -> Result<Vec<LinkRecord>> {
    let results: Vec<Result<LinkRecord>> = corpus
        .pairs
        .par_iter()
        .map(|pair| align_one(pair, corpus.spans(pair.id), word_emb, subword_emb, epsilon))
        .collect();
    results.into_iter().collect()
}

fn project_one(
    pair: &SentencePair,
    spans: &[EntitySpan],
    links: &[AlignmentLink],
    drop_uncovered: bool,
) -> Result<ProjectedRecord> {
    let n = pair.tgt_tokens.len();
    let (m, id) = (pair.src_tokens.len(), pair.id);
    if let Some(l) = links.iter().find(|l| l.src >= m || l.tgt >= n) {
        return Err(Error::Invalid(format!(
            "id={id}: link {}-{} outside a {m}x{n} sentence pair",
            l.src, l.tgt
        )));
    }
    let outside = || vec![Tag::Outside; n];
    if spans.is_empty() {
        return Ok(ProjectedRecord {
            id,
            status: Status::ZeroEntity,
            tags: outside(),
            entities: Vec::new(),
            uncovered: Vec::new(),
        });
    }
    let uncovered = check_entity_coverage(spans, links);
    if drop_uncovered && !uncovered.is_empty() {
        return Ok(ProjectedRecord {
            id,
            status: Status::Uncovered,
            tags: outside(),
            entities: Vec::new(),
            uncovered,
        });
    }

    let tags = to_bio(&project_tags(spans, links, n));
    // Entities without any link carry no alignment evidence and are left
    // out of the score (only reachable with drop_uncovered off).
    let mut entities = Vec::with_capacity(spans.len());
    for span in spans {
        let scores: Vec<f64> = links
            .iter()
            .filter(|l| span.contains(l.src))
            .map(|l| l.score)
            .collect();
        if scores.is_empty() {
            continue;
        }
        entities.push(EntityRecord {
            alignment_score: entity_alignment_score(&scores)?,
            ner_score: span.ner_score,
        });
    }
    let status = if entities.is_empty() {
        Status::Uncovered
    } else {
        Status::Projected
    };
    Ok(ProjectedRecord {
        id,
        status,
        tags: if status == Status::Projected {
            tags
        } else {
            outside()
        },
        entities: if status == Status::Projected {
            entities
        } else {
            Vec::new()
        },
        uncovered,
    })
}

pub fn project_corpus(
    corpus: &Corpus,
    links: &[LinkRecord],
    drop_uncovered: bool,
) -> Result<Vec<ProjectedRecord>> {
    corpus
        .pairs
        .par_iter()
        .zip(links.par_iter())
        .map(|(pair, record)| {
            debug_assert_eq!(pair.id, record.id);
            project_one(pair, corpus.spans(pair.id), &record.links, drop_uncovered)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn score_corpus(corpus: &Corpus, projected: &[ProjectedRecord]) -> Result<Vec<ScoredRecord>> {
    corpus
        .pairs
        .iter()
        .zip(projected)
        .map(|(pair, p)| {
            let score = match p.status {
                Status::Projected => {
                    let scored = ScoredSentence::new(
                        p.id,
                        pair.tgt_tokens.clone(),
                        p.tags.clone(),
                        p.entities.clone(),
                    )
                    .map_err(|e| Error::Invalid(format!("id={}: {e}", p.id)))?;
                    Some(scored.score())
                }
                _ => None,
            };
            Ok(ScoredRecord {
                id: p.id,
                status: p.status,
                tags: p.tags.clone(),
                score,
            })
        })
        .collect()
}

/// Keeps the top fraction of scored sentences. Returns the weak sentences
/// to write, the kept-id records and the run summary.
pub fn filter_corpus(
    corpus: &Corpus,
    scored: &[ScoredRecord],
    fraction: f64,
) -> Result<(Vec<WeakSentence>, Vec<KeptRecord>, Summary)> {
    let count = |s: Status| scored.iter().filter(|r| r.status == s).count();
    let candidates: Vec<(usize, u64, f64)> = scored
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match (r.status, r.score) {
            (Status::Projected, Some(score)) => Some((i, r.id, score)),
            _ => None,
        })
        .collect();
    let items: Vec<(u64, f64)> = candidates.iter().map(|&(_, id, s)| (id, s)).collect();
    let keep = select_top(&items, fraction)?;

    let mut sentences = Vec::with_capacity(keep.len());
    let mut kept = Vec::with_capacity(keep.len());
    for k in keep {
        let (i, id, score) = candidates[k];
        sentences.push(WeakSentence::new(
            id,
            corpus.pairs[i].tgt_tokens.clone(),
            scored[i].tags.clone(),
            score,
        )?);
        kept.push(KeptRecord { id, score });
    }

    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let summary = Summary {
        read: scored.len(),
        zero_entity: count(Status::ZeroEntity),
        dropped_uncovered: count(Status::Uncovered),
        scored: candidates.len(),
        kept: kept.len(),
        mean_score: mean(&items.iter().map(|p| p.1).collect::<Vec<_>>()),
        mean_kept_score: mean(&kept.iter().map(|k| k.score).collect::<Vec<_>>()),
    };
    Ok((sentences, kept, summary))
}

fn load_embeddings(config: &PipelineConfig) -> Result<(EmbeddingTable, EmbeddingTable)> {
    let word = read_embeddings(config.require(&config.word_emb, "word-emb")?)?;
    let subword = read_embeddings(config.require(&config.subword_emb, "subword-emb")?)?;
    Ok((word, subword))
}

/// Runs every step in memory and writes the CoNLL output.
pub fn run_generate(config: &PipelineConfig) -> Result<Summary> {
    config.validate()?;
    let out = config.require(&config.out, "out")?;
    let corpus = load_corpus(config).map_err(|e| e.in_stage("read"))?;
    let links = load_embeddings(config)
        .and_then(|(w, s)| align_corpus(&corpus, &w, &s, config.epsilon))
        .map_err(|e| e.in_stage("align"))?;
    let projected = project_corpus(&corpus, &links, config.drop_uncovered)
        .map_err(|e| e.in_stage("project"))?;
    let scored = score_corpus(&corpus, &projected).map_err(|e| e.in_stage("score"))?;
    let (sentences, _, summary) =
        filter_corpus(&corpus, &scored, config.keep_fraction).map_err(|e| e.in_stage("filter"))?;
    write_conll(&sentences, out).map_err(|e| e.in_stage("write"))?;
    Ok(summary)
}

fn artifact<T>(path: &Path, records: &[T]) -> Result<StageReport>
where
    T: serde::Serialize,
{
    write_jsonl(path, records)?;
    Ok(StageReport::Artifact {
        path: path.to_owned(),
        records: records.len(),
    })
}

/// Runs a single step, reading the previous step's artifact and writing
/// its own.
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<StageReport> {
    run_stage_inner(stage, config).map_err(|e| e.in_stage(stage.name()))
}

fn run_stage_inner(stage: Stage, config: &PipelineConfig) -> Result<StageReport> {
    config.validate()?;
    if stage == Stage::DistillCheck {
        let report = gradient_check(100, 0)?;
        if report.max_relative_error.is_nan() || report.max_relative_error >= GRADIENT_TOLERANCE {
            return Err(Error::Invalid(format!(
                "max gradient relative error {:.3e} is not below {GRADIENT_TOLERANCE:e}",
                report.max_relative_error
            )));
        }
        return Ok(StageReport::GradCheck(report));
    }

    let out = config.require(&config.out, "out")?;
    let paths = ArtifactPaths::for_output(out);
    let corpus = load_corpus(config)?;
    let ids = corpus.ids();
    match stage {
        Stage::Align => {
            let (word, subword) = load_embeddings(config)?;
            let links = align_corpus(&corpus, &word, &subword, config.epsilon)?;
            artifact(&paths.links, &links)
        }
        Stage::Project => {
            let links: Vec<LinkRecord> = read_jsonl(&paths.links)?;
            check_ids(&paths.links, links.iter().map(|r| r.id), &ids)?;
            let projected = project_corpus(&corpus, &links, config.drop_uncovered)?;
            artifact(&paths.projected, &projected)
        }
        Stage::Score => {
            let projected: Vec<ProjectedRecord> = read_jsonl(&paths.projected)?;
            check_ids(&paths.projected, projected.iter().map(|r| r.id), &ids)?;
            let scored = score_corpus(&corpus, &projected)?;
            artifact(&paths.scored, &scored)
        }
        Stage::Filter => {
            let scored: Vec<ScoredRecord> = read_jsonl(&paths.scored)?;
            check_ids(&paths.scored, scored.iter().map(|r| r.id), &ids)?;
            let (sentences, kept, summary) = filter_corpus(&corpus, &scored, config.keep_fraction)?;
            write_jsonl(&paths.kept, &kept)?;
            write_conll(&sentences, out)?;
            Ok(StageReport::Filtered {
                out: out.to_owned(),
                kept_ids: paths.kept.clone(),
                summary,
            })
        }
        Stage::DistillCheck => unreachable!(),
    }
}

/// One line per sentence: `id<TAB>src-tgt:score:method …`.
pub fn pharaoh_lines(records: &[LinkRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let links: Vec<String> = r.links.iter().map(AlignmentLink::pharaoh).collect();
        out.push_str(&format!("{}\t{}\n", r.id, links.join(" ")));
    }
    out
}
