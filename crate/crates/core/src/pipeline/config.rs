use std::path::{Path, PathBuf};

use crate::alignment::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::scoring::DEFAULT_KEEP_FRACTION;
use crate::tags::EntityType;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub word_emb: Option<PathBuf>,
    pub subword_emb: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub keep_fraction: f64,
    pub epsilon: f64,
    /// Entity types kept from the source annotations; others are ignored.
    pub tag_set: Vec<EntityType>,
    pub drop_uncovered: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            annotations: None,
            word_emb: None,
            subword_emb: None,
            out: None,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            epsilon: DEFAULT_EPSILON,
            tag_set: EntityType::ALL.to_vec(),
            drop_uncovered: true,
        }
    }
}

impl PipelineConfig {
    /// Loads a `key = value` file on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored. Relative paths are resolved
    /// against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || Some(base.join(value));
            match key {
                "corpus" => config.corpus = path(),
                "annotations" => config.annotations = path(),
                "word_emb" => config.word_emb = path(),
                "subword_emb" => config.subword_emb = path(),
                "out" => config.out = path(),
                "keep_fraction" => config.keep_fraction = parse_real(line_no, key, value)?,
                "epsilon" => config.epsilon = parse_real(line_no, key, value)?,
                "drop_uncovered" => {
                    config.drop_uncovered = value.parse().map_err(|_| {
                        Error::parse(
                            line_no,
                            format!("drop_uncovered: expected true or false, got {value:?}"),
                        )
                    })?
                }
                "tag_set" => {
                    config.tag_set = value
                        .split(',')
                        .map(|t| t.trim().parse())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::parse(line_no, e.to_string()))?
                }
                other => return Err(Error::parse(line_no, format!("unknown key {other:?}"))),
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Fraction(self.keep_fraction));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Invalid(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.tag_set.is_empty() {
            return Err(Error::Invalid("tag_set is empty".into()));
        }
        Ok(())
    }

    pub(crate) fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        match field {
            Some(p) if !p.as_os_str().is_empty() => Ok(p),
            _ => Err(Error::Invalid(format!("missing required path --{name}"))),
        }
    }
}

fn parse_real(line_no: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::parse(line_no, format!("{key}: invalid number {value:?}")))
}
