use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{s, ArrayD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    child, dropout, dropout_backward, gelu, gelu_grad, read_safetensors, softmax_rows,
    softmax_rows_backward, write_safetensors, Embedding, LayerNorm, LayerNormCache, Linear, Matrix,
    Mode, Param, Parameterized,
};
use crate::preprocess::TokenSequence;

pub const CONFIG_FILE: &str = "config.json";
pub const WEIGHTS_FILE: &str = "model.safetensors";
pub const VOCAB_FILE: &str = "vocab.txt";

/// Architecture descriptor in the usual `config.json` layout. Unknown keys
/// are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BertConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    #[serde(default = "default_positions")]
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "default_dropout")]
    pub attention_probs_dropout_prob: f64,
    #[serde(default = "default_act")]
    pub hidden_act: String,
}

fn default_positions() -> usize {
    512
}
fn default_type_vocab() -> usize {
    2
}
fn default_ln_eps() -> f64 {
    1e-12
}
fn default_dropout() -> f64 {
    0.1
}
fn default_act() -> String {
    "gelu".to_string()
}

impl BertConfig {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::checkpoint(&path, format!("cannot read descriptor: {e}")))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::checkpoint(&path, format!("malformed descriptor: {e}")))?;
        config.validate().map_err(|e| Error::checkpoint(&path, e.to_string()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.num_attention_heads == 0 {
            return Err(Error::config("hidden_size and num_attention_heads must be positive"));
        }
        if self.hidden_size % self.num_attention_heads != 0 {
            return Err(Error::config(format!(
                "hidden_size {} is not divisible by {} heads",
                self.hidden_size, self.num_attention_heads
            )));
        }
        if self.hidden_act != "gelu" {
            return Err(Error::config(format!(
                "unsupported activation {:?}; only exact gelu is implemented",
                self.hidden_act
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_attention_heads
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

impl Layer {
    fn random(c: &BertConfig, rng: &mut ChaCha8Rng) -> Self {
        let (d, i) = (c.hidden_size, c.intermediate_size);
        Self {
            query: Linear::normal(d, d, 0.02, rng),
            key: Linear::normal(d, d, 0.02, rng),
            value: Linear::normal(d, d, 0.02, rng),
            attn_out: Linear::normal(d, d, 0.02, rng),
            attn_norm: LayerNorm::new(d, c.layer_norm_eps),
            intermediate: Linear::normal(d, i, 0.02, rng),
            output: Linear::normal(i, d, 0.02, rng),
            out_norm: LayerNorm::new(d, c.layer_norm_eps),
        }
    }
}

impl Parameterized for Layer {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        self.query.visit(&child(prefix, "attention.self.query"), f);
        self.key.visit(&child(prefix, "attention.self.key"), f);
        self.value.visit(&child(prefix, "attention.self.value"), f);
        self.attn_out.visit(&child(prefix, "attention.output.dense"), f);
        self.attn_norm.visit(&child(prefix, "attention.output.LayerNorm"), f);
        self.intermediate.visit(&child(prefix, "intermediate.dense"), f);
        self.output.visit(&child(prefix, "output.dense"), f);
        self.out_norm.visit(&child(prefix, "output.LayerNorm"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        self.query.visit_mut(&child(prefix, "attention.self.query"), f);
        self.key.visit_mut(&child(prefix, "attention.self.key"), f);
        self.value.visit_mut(&child(prefix, "attention.self.value"), f);
        self.attn_out.visit_mut(&child(prefix, "attention.output.dense"), f);
        self.attn_norm.visit_mut(&child(prefix, "attention.output.LayerNorm"), f);
        self.intermediate.visit_mut(&child(prefix, "intermediate.dense"), f);
        self.output.visit_mut(&child(prefix, "output.dense"), f);
        self.out_norm.visit_mut(&child(prefix, "output.LayerNorm"), f);
    }
}

/// Post-LayerNorm transformer encoder compatible with standard BERT
/// checkpoints. The sequence representation is the final hidden state at
/// the start-token position; padded positions are dropped before attention.
#[derive(Debug, Clone, PartialEq)]
pub struct BertEncoder {
    pub config: BertConfig,
    word: Embedding,
    position: Embedding,
    token_type: Embedding,
    emb_norm: LayerNorm,
    layers: Vec<Layer>,
}

struct LayerCache {
    input: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    probs: Vec<Matrix>,
    prob_masks: Vec<Option<Matrix>>,
    context: Matrix,
    attn_mask: Option<Matrix>,
    attn_norm: LayerNormCache,
    mid: Matrix,
    inter_pre: Matrix,
    inter: Matrix,
    out_mask: Option<Matrix>,
    out_norm: LayerNormCache,
}

struct SequenceCache {
    ids: Vec<usize>,
    positions: Vec<usize>,
    emb_norm: LayerNormCache,
    emb_mask: Option<Matrix>,
    layers: Vec<LayerCache>,
}

pub struct BertCache {
    sequences: Vec<SequenceCache>,
}

impl BertEncoder {
    /// Randomly initialised model, used for tests and fixtures.
    pub fn random(config: BertConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.hidden_size;
        let word = Embedding::normal(config.vocab_size, d, 0.02, &mut rng);
        let position = Embedding::normal(config.max_position_embeddings, d, 0.02, &mut rng);
        let token_type = Embedding::normal(config.type_vocab_size.max(1), d, 0.02, &mut rng);
        let emb_norm = LayerNorm::new(d, config.layer_norm_eps);
        let layers = (0..config.num_hidden_layers)
            .map(|_| Layer::random(&config, &mut rng))
            .collect();
        Ok(Self {
            config,
            word,
            position,
            token_type,
            emb_norm,
            layers,
        })
    }

    /// Loads `config.json` and `model.safetensors` from a checkpoint
    /// directory. Tensor names may carry a `bert.` prefix and layer norms may
    /// use the legacy `gamma`/`beta` names; any float dtype is accepted.
    pub fn from_checkpoint_dir(dir: &Path) -> Result<Self> {
        let config = BertConfig::load(dir)?;
        let weights = dir.join(WEIGHTS_FILE);
        if !weights.is_file() {
            return Err(Error::checkpoint(&weights, "weights file not found"));
        }
        let raw = read_safetensors(&weights)?;
        let tensors = canonical_names(raw);
        let mut model = Self::random(config, 0)?;
        model
            .import_tensors(&tensors)
            .map_err(|e| Error::checkpoint(&weights, e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::jsonl::write_json(&dir.join(CONFIG_FILE), &self.config)?;
        write_safetensors(&dir.join(WEIGHTS_FILE), &self.export_tensors())
    }

    pub fn output_dim(&self) -> usize {
        self.config.hidden_size
    }

    pub fn forward(&self, batch: &[&TokenSequence], mode: &mut Mode<'_>) -> Result<(Matrix, BertCache)> {
        let mut out = Matrix::zeros((batch.len(), self.output_dim()));
        let mut sequences = Vec::with_capacity(batch.len());
        for (r, seq) in batch.iter().enumerate() {
            let (hidden, cache) = self.forward_one(seq, mode)?;
            out.row_mut(r).assign(&hidden.row(0));
            sequences.push(cache);
        }
        Ok((out, BertCache { sequences }))
    }

    fn forward_one(&self, seq: &TokenSequence, mode: &mut Mode<'_>) -> Result<(Matrix, SequenceCache)> {
        let c = &self.config;
        let mut ids = Vec::new();
        let mut positions = Vec::new();
        for (pos, (&id, &m)) in seq.ids.iter().zip(&seq.attention_mask).enumerate() {
            if m == 1 {
                ids.push(id as usize);
                positions.push(pos);
            }
        }
        if ids.is_empty() {
            return Err(Error::shape("sequence has no attended positions"));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= c.vocab_size) {
            return Err(Error::shape(format!(
                "token id {bad} outside vocabulary of {}",
                c.vocab_size
            )));
        }
        if let Some(&p) = positions.last() {
            if p >= c.max_position_embeddings {
                return Err(Error::shape(format!(
                    "sequence position {p} exceeds {} position embeddings",
                    c.max_position_embeddings
                )));
            }
        }
        let types = vec![0usize; ids.len()];
        let summed = self.word.forward(&ids) + self.position.forward(&positions) + self.token_type.forward(&types);
        let (normed, emb_norm) = self.emb_norm.forward(&summed);
        let (mut x, emb_mask) = dropout(&normed, c.hidden_dropout_prob, mode);

        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, cache) = self.layer_forward(layer, x, mode);
            x = y;
            layers.push(cache);
        }
        Ok((
            x,
            SequenceCache {
                ids,
                positions,
                emb_norm,
                emb_mask,
                layers,
            },
        ))
    }

    fn layer_forward(&self, layer: &Layer, x: Matrix, mode: &mut Mode<'_>) -> (Matrix, LayerCache) {
        let c = &self.config;
        let dh = c.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let q = layer.query.forward(&x);
        let k = layer.key.forward(&x);
        let v = layer.value.forward(&x);
        let mut context = Matrix::zeros(x.raw_dim());
        let mut probs = Vec::with_capacity(c.num_attention_heads);
        let mut prob_masks = Vec::with_capacity(c.num_attention_heads);
        for h in 0..c.num_attention_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            let p = softmax_rows(&scores);
            let (p_drop, mask) = dropout(&p, c.attention_probs_dropout_prob, mode);
            context.slice_mut(cols).assign(&p_drop.dot(&v.slice(cols)));
            probs.push(p);
            prob_masks.push(mask);
        }
        let attn = layer.attn_out.forward(&context);
        let (attn, attn_mask) = dropout(&attn, c.hidden_dropout_prob, mode);
        let (mid, attn_norm) = layer.attn_norm.forward(&(attn + &x));
        let inter_pre = layer.intermediate.forward(&mid);
        let inter = inter_pre.mapv(gelu);
        let out = layer.output.forward(&inter);
        let (out, out_mask) = dropout(&out, c.hidden_dropout_prob, mode);
        let (y, out_norm) = layer.out_norm.forward(&(out + &mid));
        (
            y,
            LayerCache {
                input: x,
                q,
                k,
                v,
                probs,
                prob_masks,
                context,
                attn_mask,
                attn_norm,
                mid,
                inter_pre,
                inter,
                out_mask,
                out_norm,
            },
        )
    }

    /// Accumulates parameter gradients given the gradient of the pooled
    /// output.
    pub fn backward(&mut self, cache: &BertCache, grad_out: &Matrix) {
        for (r, seq) in cache.sequences.iter().enumerate() {
            let n = seq.ids.len();
            let mut g = Matrix::zeros((n, self.output_dim()));
            g.row_mut(0).assign(&grad_out.row(r));
            self.backward_one(seq, g);
        }
    }

    fn backward_one(&mut self, seq: &SequenceCache, mut g: Matrix) {
        let c = self.config.clone();
        let dh = c.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        for (layer, lc) in self.layers.iter_mut().zip(&seq.layers).rev() {
            let g_res2 = layer.out_norm.backward(&lc.out_norm, &g, true);
            let g_out = dropout_backward(&lc.out_mask, &g_res2);
            let g_inter = layer.output.backward(&lc.inter, &g_out, true);
            let g_inter_pre = g_inter * &lc.inter_pre.mapv(gelu_grad);
            let g_mid = layer.intermediate.backward(&lc.mid, &g_inter_pre, true) + &g_res2;

            let g_res1 = layer.attn_norm.backward(&lc.attn_norm, &g_mid, true);
            let g_attn = dropout_backward(&lc.attn_mask, &g_res1);
            let g_context = layer.attn_out.backward(&lc.context, &g_attn, true);

            let mut g_q = Matrix::zeros(lc.q.raw_dim());
            let mut g_k = Matrix::zeros(lc.k.raw_dim());
            let mut g_v = Matrix::zeros(lc.v.raw_dim());
            for h in 0..c.num_attention_heads {
                let cols = s![.., h * dh..(h + 1) * dh];
                let p = &lc.probs[h];
                let p_drop = match &lc.prob_masks[h] {
                    Some(m) => p * m,
                    None => p.clone(),
                };
                let g_ctx = g_context.slice(cols);
                g_v.slice_mut(cols).assign(&p_drop.t().dot(&g_ctx));
                let g_p_drop = g_ctx.dot(&lc.v.slice(cols).t());
                let g_p = dropout_backward(&lc.prob_masks[h], &g_p_drop);
                let g_scores = softmax_rows_backward(p, &g_p) * scale;
                g_q.slice_mut(cols).assign(&g_scores.dot(&lc.k.slice(cols)));
                g_k.slice_mut(cols).assign(&g_scores.t().dot(&lc.q.slice(cols)));
            }
            let mut g_x = g_res1;
            g_x += &layer.query.backward(&lc.input, &g_q, true);
            g_x += &layer.key.backward(&lc.input, &g_k, true);
            g_x += &layer.value.backward(&lc.input, &g_v, true);
            g = g_x;
        }
        let g = dropout_backward(&seq.emb_mask, &g);
        let g = self.emb_norm.backward(&seq.emb_norm, &g, true);
        self.word.backward(&seq.ids, &g);
        self.position.backward(&seq.positions, &g);
        let types = vec![0usize; seq.ids.len()];
        self.token_type.backward(&types, &g);
    }
}

impl Parameterized for BertEncoder {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        self.word.visit(&child(prefix, "embeddings.word_embeddings"), f);
        self.position.visit(&child(prefix, "embeddings.position_embeddings"), f);
        self.token_type.visit(&child(prefix, "embeddings.token_type_embeddings"), f);
        self.emb_norm.visit(&child(prefix, "embeddings.LayerNorm"), f);
        for (i, layer) in self.layers.iter().enumerate() {
            layer.visit(&child(prefix, &format!("encoder.layer.{i}")), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        self.word.visit_mut(&child(prefix, "embeddings.word_embeddings"), f);
        self.position.visit_mut(&child(prefix, "embeddings.position_embeddings"), f);
        self.token_type.visit_mut(&child(prefix, "embeddings.token_type_embeddings"), f);
        self.emb_norm.visit_mut(&child(prefix, "embeddings.LayerNorm"), f);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_mut(&child(prefix, &format!("encoder.layer.{i}")), f);
        }
    }
}

/// Strips the `bert.` prefix and maps legacy layer-norm names.
fn canonical_names(raw: BTreeMap<String, ArrayD<f64>>) -> BTreeMap<String, ArrayD<f64>> {
    raw.into_iter()
        .map(|(name, t)| {
            let mut name = name.strip_prefix("bert.").unwrap_or(&name).to_string();
            if let Some(stem) = name.strip_suffix("LayerNorm.gamma") {
                name = format!("{stem}LayerNorm.weight");
            } else if let Some(stem) = name.strip_suffix("LayerNorm.beta") {
                name = format!("{stem}LayerNorm.bias");
            }
            (name, t)
        })
        .collect()
}
