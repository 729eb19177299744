use std::path::Path;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::label::{SentimentLabel, NUM_CLASSES};
use crate::nn::{read_safetensors, write_safetensors, Mode, Parameterized};
use crate::preprocess::TokenSequence;

use super::config::GanConfig;
use super::loss::LossBreakdown;
use super::networks::Discriminator;

pub const ENCODER_DIR: &str = "encoder";
pub const DISCRIMINATOR_FILE: &str = "discriminator.safetensors";
pub const CONFIG_FILE: &str = "config.json";
pub const LABELS_FILE: &str = "labels.json";
pub const HISTORY_FILE: &str = "history.json";

/// Output order of the discriminator's logits.
pub const LOGIT_ORDER: [&str; NUM_CLASSES + 1] = ["POSITIVE", "NEGATIVE", "NEUTRAL", "FAKE"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub losses: LossBreakdown,
    pub train_accuracy: f64,
    pub validation: Option<EvalReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: SentimentLabel,
    pub probs: [f64; NUM_CLASSES],
}

/// Drops the fake component and renormalises the real-class probabilities.
pub fn real_class_probs(probs: ArrayView1<'_, f64>) -> [f64; NUM_CLASSES] {
    let mut out = [0.0; NUM_CLASSES];
    let total: f64 = probs.iter().take(NUM_CLASSES).sum();
    for (o, &p) in out.iter_mut().zip(probs.iter()) {
        *o = if total > 0.0 { p / total } else { 1.0 / NUM_CLASSES as f64 };
    }
    out
}

/// Argmax with ties going to the earlier class.
pub fn argmax_label(probs: &[f64; NUM_CLASSES]) -> SentimentLabel {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if probs[c] > probs[best] {
            best = c;
        }
    }
    SentimentLabel::CLASSES[best]
}

/// Encoder and discriminator after training; the generator is not kept.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub encoder: Encoder,
    pub discriminator: Discriminator,
    pub config: GanConfig,
    pub history: TrainingHistory,
}

impl TrainedModel {
    pub fn predict(&self, tokens: &TokenSequence) -> Result<Prediction> {
        Ok(self.predict_batch(&[tokens])?.remove(0))
    }

    pub fn predict_batch(&self, batch: &[&TokenSequence]) -> Result<Vec<Prediction>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let (h, _) = self.encoder.forward(batch, &mut Mode::Eval)?;
        let out = self.discriminator.discriminate(&h, &mut Mode::Eval)?;
        out.probs
            .rows()
            .into_iter()
            .map(|row| {
                if row.iter().any(|p| !p.is_finite()) {
                    return Err(Error::NonFinite("prediction produced a non-finite probability".into()));
                }
                let probs = real_class_probs(row);
                Ok(Prediction {
                    label: argmax_label(&probs),
                    probs,
                })
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.encoder.save(&dir.join(ENCODER_DIR))?;
        write_safetensors(&dir.join(DISCRIMINATOR_FILE), &self.discriminator.export_tensors())?;
        crate::jsonl::write_json(&dir.join(CONFIG_FILE), &self.config)?;
        crate::jsonl::write_json(&dir.join(LABELS_FILE), &LOGIT_ORDER)?;
        crate::jsonl::write_json(&dir.join(HISTORY_FILE), &self.history)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: GanConfig = crate::jsonl::read_json(&dir.join(CONFIG_FILE))?;
        config.validate()?;
        let labels: Vec<String> = crate::jsonl::read_json(&dir.join(LABELS_FILE))?;
        if labels != LOGIT_ORDER {
            return Err(Error::checkpoint(
                dir.join(LABELS_FILE),
                format!("unexpected label order {labels:?}"),
            ));
        }
        let encoder = Encoder::load_saved(&dir.join(ENCODER_DIR))?;
        let mut discriminator = Discriminator::new(
            config.d,
            &config.discriminator_widths(),
            config.k,
            config.leaky_slope,
            config.dropout_rate,
            0,
        );
        let path = dir.join(DISCRIMINATOR_FILE);
        discriminator
            .import_tensors(&read_safetensors(&path)?)
            .map_err(|e| Error::checkpoint(&path, e.to_string()))?;
        let history_path = dir.join(HISTORY_FILE);
        let history = if history_path.exists() {
            crate::jsonl::read_json(&history_path)?
        } else {
            TrainingHistory::default()
        };
        Ok(Self {
            encoder,
            discriminator,
            config,
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn renormalises_without_fake() {
        let p = array![0.4, 0.3, 0.1, 0.2];
        let r = real_class_probs(p.view());
        assert!((r[0] - 0.5).abs() < 1e-12);
        assert!((r[1] - 0.375).abs() < 1e-12);
        assert!((r[2] - 0.125).abs() < 1e-12);
        assert_eq!(argmax_label(&r), SentimentLabel::Positive);
        let r = real_class_probs(array![0.1, 0.1, 0.6, 0.2].view());
        assert_eq!(argmax_label(&r), SentimentLabel::Neutral);
    }

    #[test]
    fn ties_prefer_earlier_class() {
        assert_eq!(argmax_label(&[0.4, 0.4, 0.2]), SentimentLabel::Positive);
        assert_eq!(argmax_label(&[0.2, 0.4, 0.4]), SentimentLabel::Negative);
    }
}
