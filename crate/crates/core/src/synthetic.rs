//! Separable three-class token-pattern corpus for desk-scale training runs.
//!
//! Every sequence is `[CLS]`, a shuffled mix of filler tokens and a few
//! marker tokens of its class, `[SEP]`, then padding.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::label::SentimentLabel;
use crate::preprocess::{TokenSequence, TokenizedExample, Vocab};

pub const MARKERS_PER_CLASS: usize = 4;
pub const FILLER_TOKENS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub labeled_per_class: usize,
    pub unlabeled: usize,
    pub validation_per_class: usize,
    pub max_length: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            labeled_per_class: 20,
            unlabeled: 600,
            validation_per_class: 20,
            max_length: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub vocab: Vocab,
    pub labeled: Vec<TokenizedExample>,
    pub unlabeled: Vec<TokenizedExample>,
    pub validation: Vec<TokenizedExample>,
}

/// `[PAD] [UNK] [CLS] [SEP]`, then markers for each class, then fillers.
pub fn synthetic_vocab_tokens() -> Vec<String> {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"].map(String::from).to_vec();
    for class in ["pos", "neg", "neu"] {
        tokens.extend((0..MARKERS_PER_CLASS).map(|i| format!("{class}{i}")));
    }
    tokens.extend((0..FILLER_TOKENS).map(|i| format!("w{i}")));
    tokens
}

fn marker_id(class: usize, i: usize) -> u32 {
    (4 + class * MARKERS_PER_CLASS + i) as u32
}

fn filler_id(i: usize) -> u32 {
    (4 + 3 * MARKERS_PER_CLASS + i) as u32
}

fn sequence(class: usize, max_length: usize, rng: &mut ChaCha8Rng) -> TokenSequence {
    let body_max = max_length.saturating_sub(2).max(3);
    let len = rng.gen_range(3.min(body_max)..=body_max);
    let markers = rng.gen_range(1..=len.min(3));
    let mut body = Vec::with_capacity(len);
    for i in 0..len {
        body.push(if i < markers {
            marker_id(class, rng.gen_range(0..MARKERS_PER_CLASS))
        } else {
            filler_id(rng.gen_range(0..FILLER_TOKENS))
        });
    }
    body.shuffle(rng);
    let mut ids = vec![2];
    ids.extend(body);
    ids.push(3);
    let content = ids.len();
    let total = max_length.max(content);
    ids.resize(total, 0);
    let mut attention_mask = vec![1u8; content];
    attention_mask.resize(total, 0);
    TokenSequence { ids, attention_mask }
}

pub fn synthetic_corpus(spec: &SyntheticSpec) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = Vocab::from_tokens(synthetic_vocab_tokens()).expect("synthetic vocabulary is valid");
    let make = |prefix: &str, per_class: usize, rng: &mut ChaCha8Rng| {
        let mut rows = Vec::new();
        for (c, label) in SentimentLabel::CLASSES.iter().enumerate() {
            for i in 0..per_class {
                let pmid = format!("{prefix}{c}{i:05}");
                rows.push(TokenizedExample::new(pmid, sequence(c, spec.max_length, rng), *label));
            }
        }
        rows
    };
    let labeled = make("L", spec.labeled_per_class, &mut rng);
    let validation = make("V", spec.validation_per_class, &mut rng);
    let unlabeled = (0..spec.unlabeled)
        .map(|i| {
            let c = rng.gen_range(0..SentimentLabel::CLASSES.len());
            TokenizedExample::new(
                format!("U{i:06}"),
                sequence(c, spec.max_length, &mut rng),
                SentimentLabel::Unlabeled,
            )
        })
        .collect();
    SyntheticData {
        vocab,
        labeled,
        unlabeled,
        validation,
    }
}
