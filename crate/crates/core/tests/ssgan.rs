use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trialsent_core::corpus::{CorpusExample, TrainingCorpus};
use trialsent_core::encoder::{Encoder, EncoderConfig};
use trialsent_core::label::{Provenance, SentimentLabel};
use trialsent_core::nn::{Mode, Parameterized};
use trialsent_core::preprocess::TokenSequence;
use trialsent_core::ssgan::{
    argmax_label, init_networks, real_class_probs, train, Batch, Discriminator, GanConfig, Generator,
    GradTargets, LossTermKind, SsGan, TrainedModel, Trainer,
};
use trialsent_core::synthetic::{synthetic_corpus, SyntheticData, SyntheticSpec};
use trialsent_core::Error;

const EPS: f64 = 1e-8;

fn data(labeled_per_class: usize, unlabeled: usize, seed: u64) -> SyntheticData {
    synthetic_corpus(&SyntheticSpec {
        labeled_per_class,
        unlabeled,
        validation_per_class: 10,
        max_length: 12,
        seed,
    })
}

fn corpus(d: &SyntheticData) -> TrainingCorpus {
    TrainingCorpus::from_rows(d.labeled.iter().chain(&d.unlabeled).cloned().collect())
}

fn small_config(d: usize, epochs: usize, seed: u64) -> GanConfig {
    GanConfig {
        noise_dim: 8,
        d,
        epochs,
        batch_size: 8,
        learning_rate_d: 3e-3,
        learning_rate_g: 3e-3,
        seed,
        ..GanConfig::default()
    }
}

fn tiny(data: &SyntheticData, d: usize, seed: u64) -> Encoder {
    Encoder::load(&EncoderConfig::tiny(data.vocab.len(), d, seed)).unwrap()
}

#[test]
fn generator_shape_and_determinism() {
    let g = Generator::new(8, &[16], 16, 0.2, 0.1, 3);
    let noise = Array2::zeros((4, 8));
    let a = g.generate(&noise, &mut Mode::Eval).unwrap();
    let b = g.generate(&noise, &mut Mode::Eval).unwrap();
    assert_eq!(a.dim(), (4, 16));
    assert_eq!(a, b);
    assert!(matches!(g.generate(&Array2::zeros((4, 7)), &mut Mode::Eval), Err(Error::Shape(_))));
}

#[test]
fn discriminator_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut disc = Discriminator::new(16, &[16], 3, 0.2, 0.1, 4);
    let h = Array2::from_shape_simple_fn((5, 16), || rng.gen_range(-3.0..3.0));
    let out = disc.discriminate(&h, &mut Mode::Train(&mut rng)).unwrap();
    assert_eq!(out.logits.dim(), (5, 4));
    assert_eq!(out.features.dim(), (5, 16));
    for row in out.probs.rows() {
        assert!((row.sum() - 1.0).abs() <= 1e-6);
    }
    disc.visit_mut("", &mut |name, p| {
        if name.starts_with("output.") {
            p.value.fill(0.0);
        }
    });
    let out = disc.discriminate(&h, &mut Mode::Eval).unwrap();
    assert!(out.probs.iter().all(|&p| (p - 0.25).abs() < 1e-15));
    assert!(matches!(disc.discriminate(&Array2::zeros((2, 15)), &mut Mode::Eval), Err(Error::Shape(_))));
}

fn sample_model(seed: u64) -> (SsGan, Vec<TokenSequence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = SsGan {
        encoder: Encoder::load(&EncoderConfig::tiny(12, 6, rng.gen())).unwrap(),
        generator: Generator::new(4, &[6], 6, 0.2, 0.1, rng.gen()),
        discriminator: Discriminator::new(6, &[6], 3, 0.2, 0.1, rng.gen()),
    };
    let seqs = (0..6)
        .map(|_| {
            let n = rng.gen_range(2..6);
            let mut ids: Vec<u32> = (0..n).map(|_| rng.gen_range(0..12)).collect();
            ids.resize(6, 0);
            let mut attention_mask = vec![1u8; n];
            attention_mask.resize(6, 0);
            TokenSequence { ids, attention_mask }
        })
        .collect();
    (model, seqs)
}

/// Losses and every parameter gradient for all four terms.
fn run(model: &SsGan, batch: &Batch<'_>, dropout_seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let state = model.forward(batch, &mut Mode::Train(&mut rng), EPS).unwrap();
    model.zero_grad();
    model.backward(&state, &LossTermKind::ALL, GradTargets::ALL, false);
    let mut grads = model.encoder.flat_grads();
    grads.extend(model.generator.flat_grads());
    grads.extend(model.discriminator.flat_grads());
    (state.losses.values().to_vec(), grads)
}

#[test]
fn unlabeled_labels_are_inert() {
    use SentimentLabel::*;
    for seed in 0..20 {
        let (model, seqs) = sample_model(seed);
        let provenance = vec![
            Provenance::Labeled,
            Provenance::Labeled,
            Provenance::Unlabeled,
            Provenance::Unlabeled,
            Provenance::Unlabeled,
            Provenance::Unlabeled,
        ];
        let noise = Array2::from_elem((3, 4), 0.3) + Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64 * 0.1);
        let batch = |unlabeled: [SentimentLabel; 4]| Batch {
            real: seqs.iter().collect(),
            labels: [vec![Positive, Neutral], unlabeled.to_vec()].concat(),
            provenance: provenance.clone(),
            noise: noise.clone(),
        };
        let reference = run(&model, &batch([Unlabeled; 4]), seed);
        for alt in [[Positive; 4], [Negative; 4], [Neutral, Positive, Negative, Neutral]] {
            assert_eq!(run(&model, &batch(alt), seed), reference);
        }
    }
}

#[test]
fn generated_rows_do_not_reach_supervised_loss() {
    let (model, seqs) = sample_model(3);
    let labels = vec![SentimentLabel::Negative; 3];
    let provenance = vec![Provenance::Labeled; 3];
    let real: Vec<&TokenSequence> = seqs.iter().take(3).collect();
    let mut sups = Vec::new();
    for scale in [0.0, 1.0, 50.0] {
        let batch = Batch {
            real: real.clone(),
            labels: labels.clone(),
            provenance: provenance.clone(),
            noise: Array2::from_elem((4, 4), scale),
        };
        let state = model.forward(&batch, &mut Mode::Eval, EPS).unwrap();
        let fake_rows = state.d_loss.sup.grad_logits.slice(ndarray::s![3.., ..]).to_owned();
        assert!(fake_rows.iter().all(|&g| g == 0.0));
        sups.push(state.losses.d_sup);
    }
    assert!(sups.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn generator_side_ignores_labels() {
    let (model, seqs) = sample_model(9);
    let g_side = |labels: Vec<SentimentLabel>| {
        let batch = Batch {
            real: seqs.iter().take(3).collect(),
            labels,
            provenance: vec![Provenance::Labeled; 3],
            noise: Array2::from_elem((3, 4), 0.7),
        };
        let mut m = model.clone();
        let state = m.forward(&batch, &mut Mode::Eval, EPS).unwrap();
        m.zero_grad();
        let targets = GradTargets { encoder: false, generator: true, discriminator: false };
        m.backward(&state, &[LossTermKind::GeneratorFeatureMatching, LossTermKind::GeneratorUnsupervised], targets, true);
        (state.losses.g_fm, state.losses.g_unsup, m.generator.flat_grads())
    };
    use SentimentLabel::*;
    assert_eq!(g_side(vec![Positive, Positive, Positive]), g_side(vec![Neutral, Negative, Positive]));
}

#[test]
fn same_seed_gives_identical_history() {
    let d = data(6, 40, 2);
    let cfg = small_config(8, 4, 11);
    let a = Trainer::new(cfg.clone()).validation(&d.validation).train(&corpus(&d), tiny(&d, 8, 1)).unwrap();
    let b = Trainer::new(cfg).validation(&d.validation).train(&corpus(&d), tiny(&d, 8, 1)).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(serde_json::to_string(&a.history).unwrap(), serde_json::to_string(&b.history).unwrap());
    assert_eq!(a.discriminator, b.discriminator);
}

#[test]
fn losses_add_up_on_every_step() {
    let d = data(6, 40, 4);
    let mut steps = 0;
    Trainer::new(small_config(8, 5, 3))
        .observer(|s| {
            steps += 1;
            assert!((s.losses.d_total - (s.losses.d_sup + s.losses.d_unsup)).abs() <= 1e-9);
            assert!((s.losses.g_total - (s.losses.g_fm + s.losses.g_unsup)).abs() <= 1e-9);
        })
        .train(&corpus(&d), tiny(&d, 8, 2))
        .unwrap();
    assert_eq!(steps, 5 * 3);
}

#[test]
fn labeled_only_corpus_reduces_supervised_loss() {
    let d = data(20, 0, 6);
    let model = train(&corpus(&d), tiny(&d, 32, 6), &GanConfig { batch_size: 16, ..small_config(32, 10, 6) }).unwrap();
    let e = &model.history.epochs;
    assert_eq!(e.len(), 10);
    assert!(e[9].losses.d_sup < e[0].losses.d_sup, "{} -> {}", e[0].losses.d_sup, e[9].losses.d_sup);
    assert!(e.iter().all(|r| r.losses.is_finite()));
}

#[test]
fn finite_over_many_seeds() {
    for seed in 0..100 {
        let d = data(3, 12, seed);
        let model = train(&corpus(&d), tiny(&d, 8, seed), &small_config(8, 2, seed)).unwrap();
        assert!(model.history.epochs.iter().all(|e| e.losses.is_finite()), "seed {seed}");
    }
}

#[test]
fn frozen_encoder_is_unchanged() {
    let d = data(4, 20, 8);
    let encoder = tiny(&d, 8, 8);
    let before = encoder.flat_values();
    let model = Trainer::new(small_config(8, 3, 8))
        .encoder_trainable(false)
        .train(&corpus(&d), encoder)
        .unwrap();
    assert_eq!(model.encoder.flat_values(), before);
}

#[test]
fn missing_class_is_rejected() {
    let d = data(4, 10, 1);
    let rows: Vec<CorpusExample> = corpus(&d)
        .examples
        .into_iter()
        .filter(|e| e.example.label != SentimentLabel::Neutral)
        .collect();
    let err = train(&TrainingCorpus { examples: rows }, tiny(&d, 8, 1), &small_config(8, 1, 1)).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)), "{err}");
    assert!(err.to_string().contains("NEUTRAL"));
}

#[test]
fn encoder_width_must_match() {
    let d = data(2, 0, 1);
    let err = init_networks(tiny(&d, 8, 1), &small_config(16, 1, 1)).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn prediction_renormalises_real_classes() {
    let p = real_class_probs(array![0.4, 0.3, 0.1, 0.2].view());
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.375).abs() < 1e-12 && (p[2] - 0.125).abs() < 1e-12);
    assert_eq!(argmax_label(&p), SentimentLabel::Positive);
    let p = real_class_probs(array![0.1, 0.1, 0.6, 0.2].view());
    assert_eq!(argmax_label(&p), SentimentLabel::Neutral);
    assert_eq!(argmax_label(&[0.4, 0.4, 0.2]), SentimentLabel::Positive);
    assert_eq!(argmax_label(&[0.2, 0.4, 0.4]), SentimentLabel::Negative);
}

#[test]
fn trained_model_round_trip() {
    let d = data(4, 20, 3);
    let model = train(&corpus(&d), tiny(&d, 8, 3), &small_config(8, 3, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path()).unwrap();
    let loaded = TrainedModel::load(dir.path()).unwrap();
    // Gradients are not persisted, so compare values.
    assert_eq!(loaded.encoder.flat_values(), model.encoder.flat_values());
    assert_eq!(loaded.discriminator.flat_values(), model.discriminator.flat_values());
    assert_eq!((&loaded.config, &loaded.history), (&model.config, &model.history));
    let seqs: Vec<TokenSequence> = d.validation.iter().map(|r| r.tokens()).collect();
    let batch: Vec<&TokenSequence> = seqs.iter().collect();
    let preds = loaded.predict_batch(&batch).unwrap();
    assert_eq!(preds, model.predict_batch(&batch).unwrap());
    for p in preds {
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
    }
}
