use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::NUM_CLASSES;

/// Hyperparameters of the adversarial fine-tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub noise_mean: f64,
    pub noise_std: f64,
    /// Representation dimension shared by encoder, generator output and
    /// discriminator input.
    pub d: usize,
    pub k: usize,
    /// Hidden widths; `None` means one hidden layer of width `d`.
    pub generator_hidden: Option<Vec<usize>>,
    pub discriminator_hidden: Option<Vec<usize>>,
    pub dropout_rate: f64,
    pub leaky_slope: f64,
    pub learning_rate_g: f64,
    pub learning_rate_d: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// When false only the supervised term is optimised and no generator
    /// or unlabeled rows are used.
    pub gan_enabled: bool,
    /// Unlabeled rows drawn per batch; `None` means `batch_size`.
    pub unlabeled_per_batch: Option<usize>,
    /// Generated rows per batch; `None` means the number of real rows.
    pub fake_per_batch: Option<usize>,
    pub epsilon: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            noise_dim: 100,
            noise_mean: 0.0,
            noise_std: 1.0,
            d: 768,
            k: NUM_CLASSES,
            generator_hidden: None,
            discriminator_hidden: None,
            dropout_rate: 0.1,
            leaky_slope: 0.2,
            learning_rate_g: 5e-5,
            learning_rate_d: 5e-5,
            epochs: 3,
            batch_size: 16,
            seed: 42,
            gan_enabled: true,
            unlabeled_per_batch: None,
            fake_per_batch: None,
            epsilon: 1e-8,
        }
    }
}

impl GanConfig {
    pub fn with_dim(d: usize) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn generator_widths(&self) -> Vec<usize> {
        self.generator_hidden.clone().unwrap_or_else(|| vec![self.d])
    }

    pub fn discriminator_widths(&self) -> Vec<usize> {
        self.discriminator_hidden.clone().unwrap_or_else(|| vec![self.d])
    }

    pub fn unlabeled_per_batch(&self) -> usize {
        self.unlabeled_per_batch.unwrap_or(self.batch_size)
    }

    /// Collects every violated constraint into one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                problems.push(msg.to_string());
            }
        };
        need(self.noise_dim >= 1, "noise_dim must be positive");
        need(self.noise_std > 0.0 && self.noise_std.is_finite(), "noise_std must be positive");
        need(self.noise_mean.is_finite(), "noise_mean must be finite");
        need(self.d >= 1, "d must be positive");
        need(self.k == NUM_CLASSES, "k must be 3");
        need(
            (0.0..1.0).contains(&self.dropout_rate),
            "dropout_rate must lie in [0, 1)",
        );
        need(self.leaky_slope.is_finite(), "leaky_slope must be finite");
        need(self.learning_rate_g > 0.0, "learning_rate_g must be positive");
        need(self.learning_rate_d > 0.0, "learning_rate_d must be positive");
        need(self.epochs >= 1, "epochs must be positive");
        need(self.batch_size >= 1, "batch_size must be positive");
        need(
            self.epsilon > 0.0 && self.epsilon < 0.5,
            "epsilon must lie in (0, 0.5)",
        );
        need(
            self.generator_widths().iter().all(|&w| w > 0),
            "generator_hidden widths must be positive",
        );
        need(
            self.discriminator_widths().iter().all(|&w| w > 0),
            "discriminator_hidden widths must be positive",
        );
        need(self.fake_per_batch != Some(0), "fake_per_batch must be positive");
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::config(problems.join("; ")))
        }
    }
}
