//! On-disk formats: the parallel corpus, source-side entity annotations,
//! contextual embeddings and the weakly labeled CoNLL output.
//!
//! Every reader reports problems with the 1-based line number of the
//! offending line. Blank lines are skipped everywhere except in CoNLL,
//! where they separate sentences.

mod annotations;
mod conll;
mod embeddings;
mod parallel;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

pub use annotations::{
    check_span_bounds, parse_source_annotations, read_source_annotations, spans_for, EntitySpan,
};
pub use conll::{format_conll, parse_conll, read_conll, write_conll, WeakSentence};
pub use embeddings::{parse_embeddings, read_embeddings, EmbeddingSet, Level, Side};
pub use parallel::{parse_parallel, read_parallel, SentencePair};

use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Yields `(line_number, line)` for every line, 1-based.
pub(crate) fn numbered_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

/// Attaches the file path to a parse error raised by one of the `parse_*`
/// functions.
pub(crate) fn with_path<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{message} (in {})", path.display()),
        },
        other => other,
    })
}
