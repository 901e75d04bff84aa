//! Weakly labeled NER data for a low-resource target language.
//!
//! Source-side entity spans are projected onto target translations through
//! embedding-based word alignments. Projected sentences are scored from
//! alignment and tagger confidences and the best fraction is written as
//! CoNLL. The [`distill`] module holds the teacher-student objective used
//! to train a tagger on that data.

pub mod alignment;
pub mod corpus_io;
pub mod distill;
pub mod error;
pub mod pipeline;
pub mod projection;
pub mod scoring;
pub mod tags;

pub use error::{Error, Result};
