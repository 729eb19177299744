//! Sequence encoders producing one real vector per token sequence.

mod bert;
mod tiny;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use bert::{BertCache, BertConfig, BertEncoder, CONFIG_FILE, VOCAB_FILE, WEIGHTS_FILE};
pub use tiny::{TinyCache, TinyEncoder};

use crate::error::{Error, Result};
use crate::nn::{write_safetensors, Matrix, Mode, Param, Parameterized};
use crate::preprocess::TokenSequence;

/// File written next to the weights describing which encoder they belong to.
pub const ENCODER_MANIFEST: &str = "encoder.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EncoderKind {
    PretrainedCheckpoint,
    TinyTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
    pub output_dim: usize,
    #[serde(default = "default_true")]
    pub trainable: bool,
    /// Initialisation seed for the tiny encoder.
    #[serde(default)]
    pub seed: u64,
    /// Vocabulary size for the tiny encoder; checkpoints carry their own.
    #[serde(default)]
    pub vocab_size: usize,
}

fn default_true() -> bool {
    true
}

impl EncoderConfig {
    pub fn tiny(vocab_size: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            kind: EncoderKind::TinyTest,
            checkpoint_path: None,
            output_dim,
            trainable: true,
            seed,
            vocab_size,
        }
    }

    pub fn pretrained(path: impl Into<PathBuf>, output_dim: usize) -> Self {
        Self {
            kind: EncoderKind::PretrainedCheckpoint,
            checkpoint_path: Some(path.into()),
            output_dim,
            trainable: true,
            seed: 0,
            vocab_size: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dim == 0 {
            return Err(Error::config("encoder output_dim must be positive"));
        }
        match self.kind {
            EncoderKind::TinyTest if self.vocab_size == 0 => {
                Err(Error::config("tiny encoder needs a positive vocab_size"))
            }
            EncoderKind::PretrainedCheckpoint if self.checkpoint_path.is_none() => Err(
                Error::config("pretrained encoder requires checkpoint_path"),
            ),
            _ => Ok(()),
        }
    }
}

/// One encoded sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealVector {
    pub values: Vec<f64>,
}

impl RealVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Tiny(TinyEncoder),
    Bert(BertEncoder),
}

pub enum EncoderCache {
    Tiny(TinyCache),
    Bert(BertCache),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    kind: EncoderKind,
    output_dim: usize,
    #[serde(default)]
    vocab_size: usize,
}

impl Encoder {
    /// Builds an encoder from configuration. For checkpoints the descriptor
    /// is read first so a dimension mismatch fails before weights are loaded.
    pub fn load(config: &EncoderConfig) -> Result<Self> {
        config.validate()?;
        match config.kind {
            EncoderKind::TinyTest => Ok(Self::Tiny(TinyEncoder::new(
                config.vocab_size,
                config.output_dim,
                config.seed,
            ))),
            EncoderKind::PretrainedCheckpoint => {
                let dir = config.checkpoint_path.as_deref().expect("validated");
                if !dir.is_dir() {
                    return Err(Error::checkpoint(dir, "checkpoint directory not found"));
                }
                let descriptor = BertConfig::load(dir)?;
                if descriptor.hidden_size != config.output_dim {
                    return Err(Error::config(format!(
                        "output_dim {} does not match checkpoint hidden size {} in {}",
                        config.output_dim,
                        descriptor.hidden_size,
                        dir.display()
                    )));
                }
                Ok(Self::Bert(BertEncoder::from_checkpoint_dir(dir)?))
            }
        }
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            Self::Tiny(_) => EncoderKind::TinyTest,
            Self::Bert(_) => EncoderKind::PretrainedCheckpoint,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Tiny(e) => e.output_dim(),
            Self::Bert(e) => e.output_dim(),
        }
    }

    pub fn forward(&self, batch: &[&TokenSequence], mode: &mut Mode<'_>) -> Result<(Matrix, EncoderCache)> {
        check_batch(batch)?;
        match self {
            Self::Tiny(e) => e.forward(batch).map(|(h, c)| (h, EncoderCache::Tiny(c))),
            Self::Bert(e) => e.forward(batch, mode).map(|(h, c)| (h, EncoderCache::Bert(c))),
        }
    }

    /// Accumulates parameter gradients for the given output gradient.
    pub fn backward(&mut self, cache: &EncoderCache, grad_out: &Matrix) {
        match (self, cache) {
            (Self::Tiny(e), EncoderCache::Tiny(c)) => e.backward(c, grad_out),
            (Self::Bert(e), EncoderCache::Bert(c)) => e.backward(c, grad_out),
            _ => panic!("encoder cache does not match encoder kind"),
        }
    }

    /// Evaluation-mode encoding.
    pub fn encode(&self, batch: &[&TokenSequence]) -> Result<Vec<RealVector>> {
        let (h, _) = self.forward(batch, &mut Mode::Eval)?;
        let vectors: Vec<RealVector> = h
            .rows()
            .into_iter()
            .map(|r| RealVector {
                values: r.to_vec(),
            })
            .collect();
        if vectors.iter().any(|v| v.values.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("encoder produced a non-finite value".into()));
        }
        Ok(vectors)
    }

    /// Writes the manifest and weights; checkpoint encoders also write their
    /// `config.json` so the directory is itself a loadable checkpoint.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            kind: self.kind(),
            output_dim: self.output_dim(),
            vocab_size: match self {
                Self::Tiny(e) => e.vocab_size(),
                Self::Bert(e) => e.config.vocab_size,
            },
        };
        crate::jsonl::write_json(&dir.join(ENCODER_MANIFEST), &manifest)?;
        match self {
            Self::Tiny(e) => write_safetensors(&dir.join(WEIGHTS_FILE), &e.export_tensors()),
            Self::Bert(e) => e.save(dir),
        }
    }

    /// Restores an encoder written by [`Encoder::save`].
    pub fn load_saved(dir: &Path) -> Result<Self> {
        let manifest: Manifest = crate::jsonl::read_json(&dir.join(ENCODER_MANIFEST))?;
        match manifest.kind {
            EncoderKind::TinyTest => {
                let weights = dir.join(WEIGHTS_FILE);
                let tensors = crate::nn::read_safetensors(&weights)?;
                let mut e = TinyEncoder::new(manifest.vocab_size, manifest.output_dim, 0);
                e.import_tensors(&tensors)
                    .map_err(|err| Error::checkpoint(&weights, err.to_string()))?;
                Ok(Self::Tiny(e))
            }
            EncoderKind::PretrainedCheckpoint => Ok(Self::Bert(BertEncoder::from_checkpoint_dir(dir)?)),
        }
    }
}

fn check_batch(batch: &[&TokenSequence]) -> Result<()> {
    let Some(first) = batch.first() else {
        return Ok(());
    };
    for seq in batch {
        if seq.ids.len() != seq.attention_mask.len() {
            return Err(Error::shape("ids and attention mask lengths differ"));
        }
        if seq.ids.len() != first.ids.len() {
            return Err(Error::shape(format!(
                "ragged batch: sequence lengths {} and {}",
                first.ids.len(),
                seq.ids.len()
            )));
        }
    }
    Ok(())
}

impl Parameterized for Encoder {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        match self {
            Self::Tiny(e) => e.visit(prefix, f),
            Self::Bert(e) => e.visit(prefix, f),
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        match self {
            Self::Tiny(e) => e.visit_mut(prefix, f),
            Self::Bert(e) => e.visit_mut(prefix, f),
        }
    }
}
