use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{child, Embedding, Linear, Matrix, Param, Parameterized};
use crate::preprocess::TokenSequence;

/// Desk-scale encoder: token embeddings, mask-aware mean pooling and one
/// `tanh` projection.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyEncoder {
    pub embedding: Embedding,
    pub projection: Linear,
}

pub struct TinyCache {
    /// Attended token ids per row.
    ids: Vec<Vec<usize>>,
    pooled: Matrix,
    output: Matrix,
}

impl TinyEncoder {
    pub fn new(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = Embedding::normal(vocab_size, dim, 1.0, &mut rng);
        let projection = Linear::new(dim, dim, &mut rng);
        Self {
            embedding,
            projection,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.outputs()
    }

    pub fn forward(&self, batch: &[&TokenSequence]) -> Result<(Matrix, TinyCache)> {
        let d = self.output_dim();
        let mut pooled = Matrix::zeros((batch.len(), d));
        let mut ids = Vec::with_capacity(batch.len());
        for (r, seq) in batch.iter().enumerate() {
            let attended: Vec<usize> = seq
                .ids
                .iter()
                .zip(&seq.attention_mask)
                .filter(|(_, &m)| m == 1)
                .map(|(&id, _)| id as usize)
                .collect();
            if let Some(bad) = attended.iter().find(|&&id| id >= self.vocab_size()) {
                return Err(Error::shape(format!(
                    "token id {bad} outside vocabulary of {}",
                    self.vocab_size()
                )));
            }
            if !attended.is_empty() {
                let rows = self.embedding.forward(&attended);
                pooled
                    .row_mut(r)
                    .assign(&(rows.sum_axis(ndarray::Axis(0)) / attended.len() as f64));
            }
            ids.push(attended);
        }
        let output = self.projection.forward(&pooled).mapv(f64::tanh);
        Ok((
            output.clone(),
            TinyCache {
                ids,
                pooled,
                output,
            },
        ))
    }

    pub fn backward(&mut self, cache: &TinyCache, grad_out: &Matrix) {
        let grad_pre = grad_out * &cache.output.mapv(|h| 1.0 - h * h);
        let grad_pooled = self.projection.backward(&cache.pooled, &grad_pre, true);
        for (r, attended) in cache.ids.iter().enumerate() {
            if attended.is_empty() {
                continue;
            }
            let share = grad_pooled.row(r).to_owned() / attended.len() as f64;
            for &id in attended {
                let mut slot = self.embedding.table.grad.row_mut(id);
                slot += &share;
            }
        }
    }
}

impl Parameterized for TinyEncoder {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        self.embedding.visit(&child(prefix, "embedding"), f);
        self.projection.visit(&child(prefix, "projection"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        self.embedding.visit_mut(&child(prefix, "embedding"), f);
        self.projection.visit_mut(&child(prefix, "projection"), f);
    }
}
