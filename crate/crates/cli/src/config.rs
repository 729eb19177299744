//! Run configuration file (TOML). Relative paths resolve against the
//! directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trialsent_annotate::AnnotateConfig;
use trialsent_core::encoder::EncoderKind;
use trialsent_core::ingest::HeadingLexicon;
use trialsent_core::preprocess::DEFAULT_MAX_LENGTH;
use trialsent_core::ssgan::GanConfig;
use trialsent_core::trend::GroupBy;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub run_dir: Option<PathBuf>,
    pub fetch: FetchConfig,
    pub preprocess: PreprocessConfig,
    pub labels: LabelsConfig,
    pub corpus: CorpusConfig,
    pub encoder: EncoderSection,
    pub gan: GanConfig,
    pub trend: TrendConfig,
    pub serve: ServeConfig,
    pub annotate: Option<AnnotateConfig>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            run_dir: None,
            fetch: FetchConfig::default(),
            preprocess: PreprocessConfig::default(),
            labels: LabelsConfig::default(),
            corpus: CorpusConfig::default(),
            encoder: EncoderSection::default(),
            gan: GanConfig::default(),
            trend: TrendConfig::default(),
            serve: ServeConfig::default(),
            annotate: None,
            base_dir: PathBuf::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub field: Option<String>,
    pub max_records: usize,
    pub from_year: Option<i32>,
    pub to_year: Option<i32>,
    pub api_key_env: Option<String>,
    /// Replay recorded responses from this directory instead of the network.
    pub fixtures: Option<PathBuf>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            field: None,
            max_records: 1000,
            from_year: None,
            to_year: None,
            api_key_env: None,
            fixtures: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub vocab: Option<PathBuf>,
    pub max_length: usize,
    pub lowercase: bool,
    pub headings: Option<Vec<String>>,
    pub conclusion_headings: Option<Vec<String>>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            vocab: None,
            max_length: DEFAULT_MAX_LENGTH,
            lowercase: true,
            headings: None,
            conclusion_headings: None,
        }
    }
}

impl PreprocessConfig {
    pub fn lexicon(&self) -> HeadingLexicon {
        let default = HeadingLexicon::default();
        match (&self.headings, &self.conclusion_headings) {
            (None, None) => default,
            (h, c) => HeadingLexicon::new(
                h.clone().unwrap_or(default.headings),
                c.clone().unwrap_or(default.conclusion_headings),
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelsConfig {
    pub annotations: Option<PathBuf>,
    /// Leave empty when the annotations file holds exactly three raters.
    pub gold_raters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub holdout: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { holdout: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub kind: EncoderKind,
    pub checkpoint: Option<PathBuf>,
    pub trainable: bool,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            kind: EncoderKind::TinyTest,
            checkpoint: None,
            trainable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendConfig {
    pub group_by: GroupBy,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self { group_by: GroupBy::Year }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
    pub static_dir: Option<PathBuf>,
    /// Event log; defaults to `annotation/events.jsonl` in the run directory.
    pub log: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            static_dir: None,
            log: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Resolves a path taken from the file against the file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn resolve_opt(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_deref().map(|p| self.resolve(p))
    }

    /// Every problem, one `section.field: message` per entry.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.fetch.max_records == 0 {
            out.push("fetch.max_records: must be at least 1".into());
        }
        if let (Some(a), Some(b)) = (self.fetch.from_year, self.fetch.to_year) {
            if a > b {
                out.push(format!("fetch.from_year: {a} is after fetch.to_year {b}"));
            }
        }
        if self.preprocess.max_length < 3 {
            out.push("preprocess.max_length: must leave room for [CLS], [SEP] and one token".into());
        }
        if !(self.corpus.holdout > 0.0 && self.corpus.holdout < 1.0) {
            out.push(format!("corpus.holdout: {} must lie strictly between 0 and 1", self.corpus.holdout));
        }
        if self.encoder.kind == EncoderKind::PretrainedCheckpoint && self.encoder.checkpoint.is_none() {
            out.push("encoder.checkpoint: required for PRETRAINED_CHECKPOINT".into());
        }
        if let Err(e) = self.gan.validate() {
            let msg = e.to_string();
            let msg = msg.strip_prefix("configuration error: ").unwrap_or(&msg);
            out.extend(msg.split("; ").map(|m| format!("gan.{m}")));
        }
        if let Some(a) = &self.annotate {
            if let Err(e) = a.validate() {
                let msg = e.to_string();
                out.extend(msg.split("; ").map(|m| format!("annotate: {m}")));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("\n  ")))
        }
    }
}
