//! Central-difference checks of every loss term against the hand-written
//! backward passes.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trialsent_core::encoder::{BertConfig, BertEncoder, Encoder, TinyEncoder};
use trialsent_core::label::{Provenance, SentimentLabel};
use trialsent_core::nn::{Mode, Parameterized};
use trialsent_core::preprocess::TokenSequence;
use trialsent_core::ssgan::{Batch, Discriminator, Generator, GradTargets, LossTermKind, SsGan};

const STEP: f64 = 1e-5;
const EPS: f64 = 1e-8;

struct Case {
    model: SsGan,
    seqs: Vec<TokenSequence>,
    labels: Vec<SentimentLabel>,
    provenance: Vec<Provenance>,
    noise: Array2<f64>,
    dropout_seed: u64,
}

impl Case {
    fn batch(&self) -> Batch<'_> {
        Batch {
            real: self.seqs.iter().collect(),
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
            noise: self.noise.clone(),
        }
    }

    fn loss(&self, model: &SsGan, term: LossTermKind) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.dropout_seed);
        let state = model.forward(&self.batch(), &mut Mode::Train(&mut rng), EPS).unwrap();
        term.value(&state.losses)
    }
}

fn random_sequence(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> TokenSequence {
    let content = rng.gen_range(2..=len);
    let mut ids: Vec<u32> = (0..content).map(|_| rng.gen_range(0..vocab as u32)).collect();
    ids.resize(len, 0);
    let mut attention_mask = vec![1u8; content];
    attention_mask.resize(len, 0);
    TokenSequence { ids, attention_mask }
}

fn random_case(rng: &mut ChaCha8Rng, encoder: Option<Encoder>) -> Case {
    let d = encoder.as_ref().map_or_else(|| rng.gen_range(2..=8), |e| e.output_dim());
    let hidden = rng.gen_range(2..=8);
    let noise_dim = rng.gen_range(2..=6);
    let vocab = 10;
    let dropout = if rng.gen_bool(0.5) { 0.0 } else { 0.1 };
    let encoder = encoder.unwrap_or_else(|| Encoder::Tiny(TinyEncoder::new(vocab, d, rng.gen())));
    let model = SsGan {
        encoder,
        generator: Generator::new(noise_dim, &[hidden], d, 0.2, dropout, rng.gen()),
        discriminator: Discriminator::new(d, &[hidden], 3, 0.2, dropout, rng.gen()),
    };
    let n_labeled = rng.gen_range(1..=3);
    let n_unlabeled = rng.gen_range(0..=3);
    let n_fake = rng.gen_range(1..=3);
    let len = 6;
    let mut seqs = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for _ in 0..n_labeled {
        seqs.push(random_sequence(rng, vocab, len));
        labels.push(SentimentLabel::CLASSES[rng.gen_range(0..3)]);
        provenance.push(Provenance::Labeled);
    }
    for _ in 0..n_unlabeled {
        seqs.push(random_sequence(rng, vocab, len));
        labels.push(SentimentLabel::Unlabeled);
        provenance.push(Provenance::Unlabeled);
    }
    let noise = Array2::from_shape_simple_fn((n_fake, noise_dim), || rng.gen_range(-1.5..1.5));
    Case {
        model,
        seqs,
        labels,
        provenance,
        noise,
        dropout_seed: rng.gen(),
    }
}

/// Largest relative error over every parameter coordinate for one term.
fn check(case: &Case, term: LossTermKind) -> f64 {
    let mut model = case.model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(case.dropout_seed);
    let state = model.forward(&case.batch(), &mut Mode::Train(&mut rng), EPS).unwrap();
    model.zero_grad();
    model.backward(&state, &[term], GradTargets::ALL, false);

    let mut worst: f64 = 0.0;
    type Get = fn(&mut SsGan) -> &mut dyn Parameterized;
    let groups: [Get; 3] = [
        |m| &mut m.encoder,
        |m| &mut m.generator,
        |m| &mut m.discriminator,
    ];
    for group in groups {
        let analytic = group(&mut model).flat_grads();
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = case.model.clone();
            group(&mut plus).nudge(i, STEP);
            let mut minus = case.model.clone();
            group(&mut minus).nudge(i, -STEP);
            let numeric = (case.loss(&plus, term) - case.loss(&minus, term)) / (2.0 * STEP);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

fn kink_free(case: &Case) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(case.dropout_seed);
    let state = case
        .model
        .forward(&case.batch(), &mut Mode::Train(&mut rng), EPS)
        .unwrap();
    state.min_abs_preactivation() > 1e-3
}

#[test]
fn tiny_encoder_all_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 25 {
        let case = random_case(&mut rng, None);
        if !kink_free(&case) {
            continue;
        }
        for term in LossTermKind::ALL {
            let err = check(&case, term);
            assert!(err <= 1e-4, "{term:?} relative error {err:e}");
        }
        checked += 1;
    }
}

#[test]
fn transformer_encoder_all_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = BertConfig {
        vocab_size: 10,
        hidden_size: 4,
        num_hidden_layers: 2,
        num_attention_heads: 2,
        intermediate_size: 6,
        max_position_embeddings: 8,
        type_vocab_size: 2,
        layer_norm_eps: 1e-12,
        hidden_dropout_prob: 0.1,
        attention_probs_dropout_prob: 0.1,
        hidden_act: "gelu".into(),
    };
    let mut checked = 0;
    while checked < 4 {
        let mut bert = BertEncoder::random(config.clone(), rng.gen()).unwrap();
        // Scaled up from the 0.02 init so attention is far from uniform.
        bert.visit_mut("", &mut |_, p| p.value.mapv_inplace(|v| v * 5.0 + 0.01));
        let case = random_case(&mut rng, Some(Encoder::Bert(bert)));
        if !kink_free(&case) {
            continue;
        }
        for term in LossTermKind::ALL {
            let err = check(&case, term);
            assert!(err <= 1e-4, "{term:?} relative error {err:e}");
        }
        checked += 1;
    }
}
