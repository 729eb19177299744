use rand::seq::{index, SliceRandom};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tracing::{debug, info};

use crate::corpus::TrainingCorpus;
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics};
use crate::label::{Provenance, SentimentLabel, NUM_CLASSES};
use crate::nn::{Adam, AdamConfig, Matrix, Mode};
use crate::preprocess::{TokenSequence, TokenizedExample};

use super::config::GanConfig;
use super::joint::{Batch, GradTargets, LossTermKind, SsGan};
use super::loss::LossBreakdown;
use super::model::{EpochRecord, TrainedModel, TrainingHistory};
use super::networks::{Discriminator, Generator};

/// Losses of one optimisation step, handed to the step observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub batch: usize,
    pub losses: LossBreakdown,
}

const STREAM_GENERATOR: u64 = 1;
const STREAM_DISCRIMINATOR: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_UNLABELED: u64 = 4;
const STREAM_NOISE: u64 = 5;
const STREAM_DROPOUT: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn derived_seed(seed: u64, id: u64) -> u64 {
    stream(seed, id).next_u64()
}

/// Builds freshly initialised generator and discriminator for `config`.
pub fn init_networks(encoder: Encoder, config: &GanConfig) -> Result<SsGan> {
    config.validate()?;
    if encoder.output_dim() != config.d {
        return Err(Error::config(format!(
            "encoder output dimension {} does not match d = {}",
            encoder.output_dim(),
            config.d
        )));
    }
    let generator = Generator::new(
        config.noise_dim,
        &config.generator_widths(),
        config.d,
        config.leaky_slope,
        config.dropout_rate,
        derived_seed(config.seed, STREAM_GENERATOR),
    );
    let discriminator = Discriminator::new(
        config.d,
        &config.discriminator_widths(),
        config.k,
        config.leaky_slope,
        config.dropout_rate,
        derived_seed(config.seed, STREAM_DISCRIMINATOR),
    );
    Ok(SsGan {
        encoder,
        generator,
        discriminator,
    })
}

/// Configures and runs adversarial training.
pub struct Trainer<'a> {
    config: GanConfig,
    encoder_trainable: bool,
    validation: &'a [TokenizedExample],
    observer: Option<Box<dyn FnMut(&StepRecord) + 'a>>,
}

impl<'a> Trainer<'a> {
    pub fn new(config: GanConfig) -> Self {
        Self {
            config,
            encoder_trainable: true,
            validation: &[],
            observer: None,
        }
    }

    pub fn encoder_trainable(mut self, trainable: bool) -> Self {
        self.encoder_trainable = trainable;
        self
    }

    pub fn validation(mut self, rows: &'a [TokenizedExample]) -> Self {
        self.validation = rows;
        self
    }

    pub fn observer(mut self, f: impl FnMut(&StepRecord) + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub fn train(mut self, corpus: &TrainingCorpus, encoder: Encoder) -> Result<TrainedModel> {
        let config = self.config.clone();
        let mut model = init_networks(encoder, &config)?;

        let labeled: Vec<(TokenSequence, SentimentLabel, &str)> = corpus
            .labeled()
            .map(|e| (e.example.tokens(), e.example.label, e.example.pmid.as_str()))
            .collect();
        let unlabeled: Vec<(TokenSequence, &str)> = corpus
            .unlabeled()
            .map(|e| (e.example.tokens(), e.example.pmid.as_str()))
            .collect();
        let mut counts = [0usize; NUM_CLASSES];
        for (_, label, _) in &labeled {
            counts[label.require_class()?] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "training corpus has no labeled {} example",
                SentimentLabel::CLASSES[c]
            )));
        }

        let mut opt_d = Adam::new(AdamConfig::with_lr(config.learning_rate_d));
        let mut opt_e = Adam::new(AdamConfig::with_lr(config.learning_rate_d));
        let mut opt_g = Adam::new(AdamConfig::with_lr(config.learning_rate_g));
        let mut shuffle_rng = stream(config.seed, STREAM_SHUFFLE);
        let mut unlabeled_rng = stream(config.seed, STREAM_UNLABELED);
        let mut noise_rng = stream(config.seed, STREAM_NOISE);
        let mut dropout_rng = stream(config.seed, STREAM_DROPOUT);
        let noise = Normal::new(config.noise_mean, config.noise_std)
            .map_err(|e| Error::config(format!("noise distribution: {e}")))?;

        let d_terms: &[LossTermKind] = if config.gan_enabled {
            &[
                LossTermKind::DiscriminatorSupervised,
                LossTermKind::DiscriminatorUnsupervised,
            ]
        } else {
            &[LossTermKind::DiscriminatorSupervised]
        };
        let d_targets = GradTargets {
            encoder: self.encoder_trainable,
            generator: false,
            discriminator: true,
        };
        let g_targets = GradTargets {
            encoder: false,
            generator: true,
            discriminator: false,
        };

        let mut history = TrainingHistory::default();
        let mut order: Vec<usize> = (0..labeled.len()).collect();
        for epoch in 1..=config.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut step_losses = Vec::new();
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let mut real: Vec<&TokenSequence> = Vec::new();
                let mut labels = Vec::new();
                let mut provenance = Vec::new();
                let mut pmids: Vec<&str> = Vec::new();
                for &i in chunk {
                    real.push(&labeled[i].0);
                    labels.push(labeled[i].1);
                    provenance.push(Provenance::Labeled);
                    pmids.push(labeled[i].2);
                }
                let n_fake = if config.gan_enabled {
                    let want = config.unlabeled_per_batch().min(unlabeled.len());
                    if want > 0 {
                        for i in index::sample(&mut unlabeled_rng, unlabeled.len(), want) {
                            real.push(&unlabeled[i].0);
                            labels.push(SentimentLabel::Unlabeled);
                            provenance.push(Provenance::Unlabeled);
                            pmids.push(unlabeled[i].1);
                        }
                    }
                    config.fake_per_batch.unwrap_or(real.len())
                } else {
                    0
                };
                let noise_batch =
                    Matrix::from_shape_simple_fn((n_fake, config.noise_dim), || noise.sample(&mut noise_rng));
                let batch = Batch {
                    real,
                    labels,
                    provenance,
                    noise: noise_batch,
                };

                let state = model.forward(&batch, &mut Mode::Train(&mut dropout_rng), config.epsilon)?;
                if !state.losses.is_finite() || state.output.probs.iter().any(|p| !p.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "epoch {epoch} batch {b}: losses {:?}; rows {}",
                        state.losses,
                        pmids.join(", ")
                    )));
                }
                model.zero_grad();
                model.backward(&state, d_terms, d_targets, true);
                if config.gan_enabled && state.n_fake() > 0 {
                    model.backward(
                        &state,
                        &[
                            LossTermKind::GeneratorFeatureMatching,
                            LossTermKind::GeneratorUnsupervised,
                        ],
                        g_targets,
                        true,
                    );
                }
                opt_d.step(&mut model.discriminator);
                if self.encoder_trainable {
                    opt_e.step(&mut model.encoder);
                }
                if config.gan_enabled {
                    opt_g.step(&mut model.generator);
                }
                let record = StepRecord {
                    epoch,
                    batch: b,
                    losses: state.losses,
                };
                if let Some(obs) = self.observer.as_mut() {
                    obs(&record);
                }
                debug!(epoch, batch = b, ?state.losses, "step");
                step_losses.push(state.losses);
            }

            let snapshot = TrainedModel {
                encoder: model.encoder.clone(),
                discriminator: model.discriminator.clone(),
                config: config.clone(),
                history: TrainingHistory::default(),
            };
            let train_accuracy = accuracy(&snapshot, labeled.iter().map(|(t, l, _)| (t, *l)))?;
            let validation = if self.validation.iter().any(|r| r.label.is_real()) {
                let rows: Vec<(TokenSequence, SentimentLabel)> = self
                    .validation
                    .iter()
                    .filter(|r| r.label.is_real())
                    .map(|r| (r.tokens(), r.label))
                    .collect();
                Some(report(&snapshot, rows.iter().map(|(t, l)| (t, *l)))?)
            } else {
                None
            };
            let losses = LossBreakdown::mean(&step_losses);
            info!(
                epoch,
                l_d = losses.d_total,
                l_g = losses.g_total,
                train_accuracy,
                val_accuracy = validation.as_ref().map(|v| v.accuracy),
                "epoch"
            );
            history.epochs.push(EpochRecord {
                epoch,
                losses,
                train_accuracy,
                validation,
            });
        }

        Ok(TrainedModel {
            encoder: model.encoder,
            discriminator: model.discriminator,
            config,
            history,
        })
    }
}

/// Convenience wrapper without validation data or observer.
pub fn train(corpus: &TrainingCorpus, encoder: Encoder, config: &GanConfig) -> Result<TrainedModel> {
    Trainer::new(config.clone()).train(corpus, encoder)
}

const EVAL_CHUNK: usize = 64;

fn report<'t>(
    model: &TrainedModel,
    rows: impl Iterator<Item = (&'t TokenSequence, SentimentLabel)>,
) -> Result<crate::eval::EvalReport> {
    let rows: Vec<_> = rows.collect();
    let mut pairs = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(EVAL_CHUNK) {
        let seqs: Vec<&TokenSequence> = chunk.iter().map(|(t, _)| *t).collect();
        for (pred, (_, gold)) in model.predict_batch(&seqs)?.into_iter().zip(chunk) {
            pairs.push((*gold, pred.label));
        }
    }
    metrics(&confusion(&pairs)?)
}

fn accuracy<'t>(
    model: &TrainedModel,
    rows: impl Iterator<Item = (&'t TokenSequence, SentimentLabel)>,
) -> Result<f64> {
    Ok(report(model, rows)?.accuracy)
}
