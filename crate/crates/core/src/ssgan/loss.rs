use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Provenance, SentimentLabel};
use crate::nn::Matrix;

use super::networks::column_mean;

/// The four loss terms and their two sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    #[serde(rename = "L_D_sup")]
    pub d_sup: f64,
    #[serde(rename = "L_D_unsup")]
    pub d_unsup: f64,
    #[serde(rename = "L_D")]
    pub d_total: f64,
    #[serde(rename = "L_G_fm")]
    pub g_fm: f64,
    #[serde(rename = "L_G_unsup")]
    pub g_unsup: f64,
    #[serde(rename = "L_G")]
    pub g_total: f64,
}

impl LossBreakdown {
    pub fn new(d_sup: f64, d_unsup: f64, g_fm: f64, g_unsup: f64) -> Self {
        Self {
            d_sup,
            d_unsup,
            d_total: d_sup + d_unsup,
            g_fm,
            g_unsup,
            g_total: g_fm + g_unsup,
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.d_sup, self.d_unsup, self.d_total, self.g_fm, self.g_unsup, self.g_total]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    /// Term-wise mean; the sums are re-derived from the averaged terms.
    pub fn mean(items: &[LossBreakdown]) -> Self {
        if items.is_empty() {
            return Self::default();
        }
        let n = items.len() as f64;
        let avg = |f: fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
        Self::new(
            avg(|l| l.d_sup),
            avg(|l| l.d_unsup),
            avg(|l| l.g_fm),
            avg(|l| l.g_unsup),
        )
    }
}

/// A scalar loss with its gradient w.r.t. the logits it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub grad_logits: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorLoss {
    pub sup: LossTerm,
    pub unsup: LossTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatching {
    pub value: f64,
    pub grad_real: Matrix,
    pub grad_fake: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorLoss {
    pub fm: FeatureMatching,
    /// Gradient rows align with the fake rows passed in.
    pub unsup: LossTerm,
}

fn interior(p: f64, eps: f64) -> bool {
    p >= eps && p <= 1.0 - eps
}

/// `-ln p[j]` and its logit gradient `p - e_j`.
fn neg_log_prob(p: ArrayView1<'_, f64>, j: usize, eps: f64) -> (f64, Array1<f64>) {
    let pj = p[j];
    let value = -pj.clamp(eps, 1.0 - eps).ln();
    let grad = if interior(pj, eps) {
        let mut g = p.to_owned();
        g[j] -= 1.0;
        g
    } else {
        Array1::zeros(p.len())
    };
    (value, grad)
}

/// `-ln(1 - p[fake])`, with `1 - p[fake]` summed from the real-class
/// probabilities for accuracy when the fake probability is close to one.
fn neg_log_not_fake(p: ArrayView1<'_, f64>, fake: usize, eps: f64) -> (f64, Array1<f64>) {
    let q: f64 = p.iter().take(fake).sum();
    let value = -q.clamp(eps, 1.0 - eps).ln();
    let grad = if interior(q, eps) {
        Array1::from_iter(
            p.iter()
                .enumerate()
                .map(|(j, &pj)| if j < fake { pj - pj / q } else { pj }),
        )
    } else {
        Array1::zeros(p.len())
    };
    (value, grad)
}

/// Discriminator-side losses over a batch whose rows are partitioned by
/// `provenance`. Labels are read only for `Labeled` rows.
pub fn loss_discriminator(
    probs: &Matrix,
    labels: &[SentimentLabel],
    provenance: &[Provenance],
    eps: f64,
) -> Result<DiscriminatorLoss> {
    let n = probs.nrows();
    if n == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if labels.len() != n || provenance.len() != n {
        return Err(Error::shape(format!(
            "{} rows but {} labels and {} provenance flags",
            n,
            labels.len(),
            provenance.len()
        )));
    }
    let fake = probs.ncols() - 1;
    let count = |kind: Provenance| provenance.iter().filter(|&&p| p == kind).count();
    let n_labeled = count(Provenance::Labeled);
    let n_real = n_labeled + count(Provenance::Unlabeled);
    let n_fake = count(Provenance::Fake);

    let mut sup = LossTerm {
        value: 0.0,
        grad_logits: Matrix::zeros(probs.raw_dim()),
    };
    let mut unsup = LossTerm {
        value: 0.0,
        grad_logits: Matrix::zeros(probs.raw_dim()),
    };
    for (r, p) in probs.axis_iter(Axis(0)).enumerate() {
        match provenance[r] {
            Provenance::Labeled => {
                let class = labels[r].require_class()?;
                let (v, g) = neg_log_prob(p, class, eps);
                sup.value += v / n_labeled as f64;
                sup.grad_logits.row_mut(r).assign(&(g / n_labeled as f64));
                let (v, g) = neg_log_not_fake(p, fake, eps);
                unsup.value += v / n_real as f64;
                unsup.grad_logits.row_mut(r).assign(&(g / n_real as f64));
            }
            Provenance::Unlabeled => {
                let (v, g) = neg_log_not_fake(p, fake, eps);
                unsup.value += v / n_real as f64;
                unsup.grad_logits.row_mut(r).assign(&(g / n_real as f64));
            }
            Provenance::Fake => {
                let (v, g) = neg_log_prob(p, fake, eps);
                unsup.value += v / n_fake as f64;
                unsup.grad_logits.row_mut(r).assign(&(g / n_fake as f64));
            }
        }
    }
    Ok(DiscriminatorLoss { sup, unsup })
}

/// Generator-side losses: feature matching between mean real and mean fake
/// features, and the fake rows' `-ln(1 - p_fake)`.
pub fn loss_generator(
    real_features: &Matrix,
    fake_features: &Matrix,
    fake_probs: &Matrix,
    eps: f64,
) -> Result<GeneratorLoss> {
    if real_features.nrows() == 0 || fake_features.nrows() == 0 {
        return Err(Error::invalid("feature batches must be non-empty"));
    }
    if real_features.ncols() != fake_features.ncols() {
        return Err(Error::shape(format!(
            "real features have width {}, fake features {}",
            real_features.ncols(),
            fake_features.ncols()
        )));
    }
    if fake_probs.nrows() != fake_features.nrows() {
        return Err(Error::shape("fake probabilities and features disagree on row count"));
    }
    let diff = column_mean(real_features) - column_mean(fake_features);
    let value = diff.dot(&diff);
    let n_real = real_features.nrows() as f64;
    let n_fake = fake_features.nrows() as f64;
    let row_real = (&diff * (2.0 / n_real)).insert_axis(Axis(0));
    let row_fake = (&diff * (-2.0 / n_fake)).insert_axis(Axis(0));
    let grad_real = Matrix::zeros(real_features.raw_dim()) + &row_real;
    let grad_fake = Matrix::zeros(fake_features.raw_dim()) + &row_fake;

    let fake = fake_probs.ncols() - 1;
    let mut unsup = LossTerm {
        value: 0.0,
        grad_logits: Matrix::zeros(fake_probs.raw_dim()),
    };
    for (r, p) in fake_probs.axis_iter(Axis(0)).enumerate() {
        let (v, g) = neg_log_not_fake(p, fake, eps);
        unsup.value += v / n_fake;
        unsup.grad_logits.row_mut(r).assign(&(g / n_fake));
    }
    Ok(GeneratorLoss {
        fm: FeatureMatching {
            value,
            grad_real,
            grad_fake,
        },
        unsup,
    })
}
