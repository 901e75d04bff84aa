use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

use super::{numbered_lines, open, with_path};

/// One source/target translation pair, pre-tokenized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub id: u64,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
}

/// Reads `id<TAB>source tokens<TAB>target tokens` lines.
pub fn read_parallel(path: &Path) -> Result<Vec<SentencePair>> {
    with_path(path, parse_parallel(open(path)?))
}

pub fn parse_parallel<R: BufRead>(reader: R) -> Result<Vec<SentencePair>> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in numbered_lines(reader) {
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let id: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid id {:?}", fields[0])))?;
        if !seen.insert(id) {
            return Err(Error::parse(line_no, format!("duplicate id {id}")));
        }
        let src_tokens = tokens(fields[1]);
        let tgt_tokens = tokens(fields[2]);
        if src_tokens.is_empty() || tgt_tokens.is_empty() {
            return Err(Error::parse(line_no, "empty token list"));
        }
        pairs.push(SentencePair {
            id,
            src_tokens,
            tgt_tokens,
        });
    }
    Ok(pairs)
}

fn tokens(field: &str) -> Vec<String> {
    field.split_whitespace().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_pair() {
        let pairs =
            parse_parallel("0\tJohn lives in Paris\tजॉन पेरिस में रहता है\n".as_bytes()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].id, 0);
        assert_eq!(pairs[0].src_tokens.len(), 4);
        assert_eq!(pairs[0].tgt_tokens.len(), 5);
        assert_eq!(pairs[0].tgt_tokens[1], "पेरिस");
    }

    #[test]
    fn empty_input() {
        assert!(parse_parallel("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn wrong_field_count() {
        let err = parse_parallel("0\tJohn lives\n".as_bytes()).unwrap_err();
        assert!(
            err.to_string().starts_with("line 1: expected 3 fields"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_id() {
        let err = parse_parallel("3\ta\tb\n\n3\tc\td\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn preserves_file_order() {
        let pairs = parse_parallel("5\ta\tb\n\n2\tc\td\n9\te\tf\n".as_bytes()).unwrap();
        let ids: Vec<u64> = pairs.iter().map(|p| p.id).collect();
        assert_eq!(ids, [5, 2, 9]);
    }

    #[test]
    fn rejects_bad_id_and_empty_side() {
        assert!(parse_parallel("x\ta\tb\n".as_bytes()).is_err());
        assert!(parse_parallel("0\t \tb\n".as_bytes()).is_err());
    }
}
