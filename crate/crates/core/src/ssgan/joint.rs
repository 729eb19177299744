use ndarray::{concatenate, s, Axis};

use crate::encoder::{Encoder, EncoderCache};
use crate::error::{Error, Result};
use crate::label::{Provenance, SentimentLabel};
use crate::nn::{Matrix, Mode, Parameterized};
use crate::preprocess::TokenSequence;

use super::loss::{loss_discriminator, loss_generator, DiscriminatorLoss, GeneratorLoss, LossBreakdown};
use super::networks::{Discriminator, DiscriminatorOutput, Generator, Mlp, MlpCache};

/// Real rows come first, generated rows (one per noise row) after them.
pub struct Batch<'a> {
    pub real: Vec<&'a TokenSequence>,
    pub labels: Vec<SentimentLabel>,
    /// `Labeled` or `Unlabeled` for each real row.
    pub provenance: Vec<Provenance>,
    pub noise: Matrix,
}

impl Batch<'_> {
    pub fn n_real(&self) -> usize {
        self.real.len()
    }

    pub fn n_fake(&self) -> usize {
        self.noise.nrows()
    }
}

/// Everything a single forward pass produces, kept for the backward passes.
pub struct ForwardState {
    pub output: DiscriminatorOutput,
    pub h_real: Matrix,
    pub h_fake: Matrix,
    pub d_loss: DiscriminatorLoss,
    pub g_loss: Option<GeneratorLoss>,
    pub losses: LossBreakdown,
    n_real: usize,
    enc_cache: EncoderCache,
    gen_cache: Option<MlpCache>,
    disc_cache: MlpCache,
}

impl ForwardState {
    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn n_fake(&self) -> usize {
        self.h_fake.nrows()
    }

    /// Smallest `|z|` over generator and discriminator hidden units.
    pub fn min_abs_preactivation(&self) -> f64 {
        let g = self
            .gen_cache
            .as_ref()
            .map(Mlp::min_abs_preactivation)
            .unwrap_or(f64::INFINITY);
        g.min(Mlp::min_abs_preactivation(&self.disc_cache))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTermKind {
    DiscriminatorSupervised,
    DiscriminatorUnsupervised,
    GeneratorFeatureMatching,
    GeneratorUnsupervised,
}

impl LossTermKind {
    pub const ALL: [LossTermKind; 4] = [
        LossTermKind::DiscriminatorSupervised,
        LossTermKind::DiscriminatorUnsupervised,
        LossTermKind::GeneratorFeatureMatching,
        LossTermKind::GeneratorUnsupervised,
    ];

    pub fn value(self, losses: &LossBreakdown) -> f64 {
        match self {
            Self::DiscriminatorSupervised => losses.d_sup,
            Self::DiscriminatorUnsupervised => losses.d_unsup,
            Self::GeneratorFeatureMatching => losses.g_fm,
            Self::GeneratorUnsupervised => losses.g_unsup,
        }
    }
}

/// Which parameter groups receive gradients in a backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradTargets {
    pub encoder: bool,
    pub generator: bool,
    pub discriminator: bool,
}

impl GradTargets {
    pub const ALL: GradTargets = GradTargets {
        encoder: true,
        generator: true,
        discriminator: true,
    };
}

/// Encoder, generator and discriminator trained together.
#[derive(Debug, Clone, PartialEq)]
pub struct SsGan {
    pub encoder: Encoder,
    pub generator: Generator,
    pub discriminator: Discriminator,
}

impl SsGan {
    pub fn forward(&self, batch: &Batch<'_>, mode: &mut Mode<'_>, eps: f64) -> Result<ForwardState> {
        let n_real = batch.n_real();
        if batch.labels.len() != n_real || batch.provenance.len() != n_real {
            return Err(Error::shape("labels and provenance must align with real rows"));
        }
        if batch
            .provenance
            .iter()
            .any(|p| *p == Provenance::Fake)
        {
            return Err(Error::invalid("real rows cannot carry the fake provenance"));
        }
        if n_real + batch.n_fake() == 0 {
            return Err(Error::invalid("empty batch"));
        }
        let (h_real, enc_cache) = self.encoder.forward(&batch.real, mode)?;
        let (h_fake, gen_cache) = if batch.n_fake() > 0 {
            if batch.noise.ncols() != self.generator.noise_dim() {
                return Err(Error::shape(format!(
                    "noise width {} != noise_dim {}",
                    batch.noise.ncols(),
                    self.generator.noise_dim()
                )));
            }
            let (h, c) = self.generator.forward(&batch.noise, mode)?;
            (h, Some(c))
        } else {
            (Matrix::zeros((0, self.encoder.output_dim())), None)
        };
        let h = concatenate(Axis(0), &[h_real.view(), h_fake.view()])
            .map_err(|e| Error::shape(format!("real and fake widths differ: {e}")))?;
        let (output, disc_cache) = self.discriminator.forward(&h, mode)?;

        let mut labels = batch.labels.clone();
        let mut provenance = batch.provenance.clone();
        labels.resize(h.nrows(), SentimentLabel::Unlabeled);
        provenance.resize(h.nrows(), Provenance::Fake);
        let d_loss = loss_discriminator(&output.probs, &labels, &provenance, eps)?;
        let g_loss = if h_fake.nrows() > 0 && n_real > 0 {
            Some(loss_generator(
                &output.features.slice(s![..n_real, ..]).to_owned(),
                &output.features.slice(s![n_real.., ..]).to_owned(),
                &output.probs.slice(s![n_real.., ..]).to_owned(),
                eps,
            )?)
        } else {
            None
        };
        let losses = LossBreakdown::new(
            d_loss.sup.value,
            d_loss.unsup.value,
            g_loss.as_ref().map_or(0.0, |g| g.fm.value),
            g_loss.as_ref().map_or(0.0, |g| g.unsup.value),
        );
        Ok(ForwardState {
            output,
            h_real,
            h_fake,
            d_loss,
            g_loss,
            losses,
            n_real,
            enc_cache,
            gen_cache,
            disc_cache,
        })
    }

    pub fn zero_grad(&mut self) {
        self.encoder.zero_grad();
        self.generator.zero_grad();
        self.discriminator.zero_grad();
    }

    /// Backpropagates the sum of `terms`. With `detach_real_features` the
    /// real rows' discriminator features are treated as constants in the
    /// feature-matching term.
    pub fn backward(
        &mut self,
        state: &ForwardState,
        terms: &[LossTermKind],
        targets: GradTargets,
        detach_real_features: bool,
    ) {
        let n_real = state.n_real;
        let mut grad_logits = Matrix::zeros(state.output.logits.raw_dim());
        let mut grad_features = Matrix::zeros(state.output.features.raw_dim());
        for term in terms {
            match term {
                LossTermKind::DiscriminatorSupervised => grad_logits += &state.d_loss.sup.grad_logits,
                LossTermKind::DiscriminatorUnsupervised => {
                    grad_logits += &state.d_loss.unsup.grad_logits
                }
                LossTermKind::GeneratorUnsupervised => {
                    if let Some(g) = &state.g_loss {
                        let mut rows = grad_logits.slice_mut(s![n_real.., ..]);
                        rows += &g.unsup.grad_logits;
                    }
                }
                LossTermKind::GeneratorFeatureMatching => {
                    if let Some(g) = &state.g_loss {
                        if !detach_real_features {
                            let mut rows = grad_features.slice_mut(s![..n_real, ..]);
                            rows += &g.fm.grad_real;
                        }
                        let mut rows = grad_features.slice_mut(s![n_real.., ..]);
                        rows += &g.fm.grad_fake;
                    }
                }
            }
        }
        let grad_h = self.discriminator.net.backward(
            &state.disc_cache,
            &grad_logits,
            Some(&grad_features),
            targets.discriminator,
        );
        if targets.encoder && n_real > 0 {
            let g = grad_h.slice(s![..n_real, ..]).to_owned();
            self.encoder.backward(&state.enc_cache, &g);
        }
        if targets.generator {
            if let Some(cache) = &state.gen_cache {
                let g = grad_h.slice(s![n_real.., ..]).to_owned();
                self.generator.net.backward(cache, &g, None, true);
            }
        }
    }
}
