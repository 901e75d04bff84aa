use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tags::{is_valid_bio, Tag};

use super::{numbered_lines, open, with_path};

/// A target sentence with projected BIO tags and its quality score.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSentence {
    pub id: u64,
    pub tgt_tokens: Vec<String>,
    pub tags: Vec<Tag>,
    pub sentence_score: f64,
}

impl WeakSentence {
    pub fn new(
        id: u64,
        tgt_tokens: Vec<String>,
        tags: Vec<Tag>,
        sentence_score: f64,
    ) -> Result<Self> {
        let sentence = WeakSentence {
            id,
            tgt_tokens,
            tags,
            sentence_score,
        };
        sentence.validate()?;
        Ok(sentence)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tags.len() != self.tgt_tokens.len() {
            return Err(Error::Invalid(format!(
                "sentence {}: {} tags for {} tokens",
                self.id,
                self.tags.len(),
                self.tgt_tokens.len()
            )));
        }
        if !is_valid_bio(&self.tags) {
            return Err(Error::Invalid(format!(
                "sentence {}: invalid BIO sequence",
                self.id
            )));
        }
        if self.sentence_score.is_nan() || self.sentence_score > 0.0 {
            return Err(Error::Invalid(format!(
                "sentence {}: score {} is not <= 0",
                self.id, self.sentence_score
            )));
        }
        if let Some(t) = self
            .tgt_tokens
            .iter()
            .find(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            return Err(Error::Invalid(format!(
                "sentence {}: bad token {t:?}",
                self.id
            )));
        }
        Ok(())
    }
}

/// Renders sentences as CoNLL: a `# id=<id> score=<score>` header, one
/// `token<TAB>tag` line per token and a blank line after each sentence.
pub fn format_conll(sentences: &[WeakSentence]) -> Result<String> {
    let mut out = String::new();
    for s in sentences {
        s.validate()?;
        // -0.0 would print as "-0.000000"
        let score = if s.sentence_score == 0.0 {
            0.0
        } else {
            s.sentence_score
        };
        writeln!(out, "# id={} score={:.6}", s.id, score).unwrap();
        for (token, tag) in s.tgt_tokens.iter().zip(&s.tags) {
            writeln!(out, "{token}\t{tag}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_conll(sentences: &[WeakSentence], path: &Path) -> Result<()> {
    let text = format_conll(sentences)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_conll(path: &Path) -> Result<Vec<WeakSentence>> {
    with_path(path, parse_conll(open(path)?))
}

/// Parses the format produced by [`format_conll`]. Scores come back with
/// the six decimals they were printed with.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<WeakSentence>> {
    let mut out = Vec::new();
    let mut current: Option<(usize, WeakSentence)> = None;

    let finish = |cur: Option<(usize, WeakSentence)>, out: &mut Vec<WeakSentence>| -> Result<()> {
        if let Some((header_line, s)) = cur {
            s.validate()
                .map_err(|e| Error::parse(header_line, e.to_string()))?;
            out.push(s);
        }
        Ok(())
    };

    for (line_no, line) in numbered_lines(reader) {
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.is_empty() {
            finish(current.take(), &mut out)?;
        } else if let Some(header) = line.strip_prefix("# ") {
            if current.is_some() {
                return Err(Error::parse(line_no, "header inside a sentence"));
            }
            let (id, score) = parse_header(header)
                .ok_or_else(|| Error::parse(line_no, format!("malformed header {line:?}")))?;
            current = Some((
                line_no,
                WeakSentence {
                    id,
                    tgt_tokens: Vec::new(),
                    tags: Vec::new(),
                    sentence_score: score,
                },
            ));
        } else {
            let Some((_, s)) = current.as_mut() else {
                return Err(Error::parse(line_no, "token line before header"));
            };
            let (token, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected token<TAB>tag"))?;
            let tag: Tag = tag
                .parse()
                .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            s.tgt_tokens.push(token.to_owned());
            s.tags.push(tag);
        }
    }
    finish(current.take(), &mut out)?;
    Ok(out)
}

fn parse_header(header: &str) -> Option<(u64, f64)> {
    let mut parts = header.split(' ');
    let id = parts.next()?.strip_prefix("id=")?.parse().ok()?;
    let score = parts.next()?.strip_prefix("score=")?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((id, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::EntityType;

    fn sentence(score: f64) -> WeakSentence {
        WeakSentence::new(
            0,
            vec!["जॉन".into(), "आया".into()],
            vec![Tag::Begin(EntityType::Per), Tag::Outside],
            score,
        )
        .unwrap()
    }

    #[test]
    fn single_sentence_layout() {
        let text = format_conll(&[sentence(0.0)]).unwrap();
        assert_eq!(text, "# id=0 score=0.000000\nजॉन\tB-PER\nआया\tO\n\n");
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with("\n\n"));
    }

    #[test]
    fn empty_list() {
        assert_eq!(format_conll(&[]).unwrap(), "");
    }

    #[test]
    fn score_rounding() {
        let text = format_conll(&[sentence(-0.5108256)]).unwrap();
        assert!(text.starts_with("# id=0 score=-0.510826\n"), "{text}");
        let text = format_conll(&[sentence(-0.0)]).unwrap();
        assert!(text.starts_with("# id=0 score=0.000000\n"), "{text}");
    }

    #[test]
    fn rejects_invalid_sentences() {
        let tokens = vec!["a".to_string()];
        assert!(WeakSentence::new(0, tokens.clone(), vec![], -1.0).is_err());
        assert!(
            WeakSentence::new(0, tokens.clone(), vec![Tag::Inside(EntityType::Loc)], -1.0).is_err()
        );
        assert!(WeakSentence::new(0, tokens, vec![Tag::Outside], 0.5).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let sentences = vec![sentence(-1.25), {
            let mut s = sentence(-0.5108256);
            s.id = 7;
            s
        }];
        let parsed = parse_conll(format_conll(&sentences).unwrap().as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[1].id, 7);
        assert_eq!(parsed[1].tags, sentences[1].tags);
        assert_eq!(parsed[1].sentence_score, -0.510826);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_conll("# id=0 score=0.000000\nfoo\tB-XYZ\n\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_conll("foo\tO\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_conll("# id=x score=1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
