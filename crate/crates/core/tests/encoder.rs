use std::collections::BTreeMap;

use half::f16;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safetensors::tensor::{Dtype, TensorView};
use trialsent_core::encoder::{
    BertConfig, BertEncoder, Encoder, EncoderConfig, EncoderKind, CONFIG_FILE, WEIGHTS_FILE,
};
use trialsent_core::nn::{Mode, Parameterized};
use trialsent_core::preprocess::TokenSequence;
use trialsent_core::Error;

fn seq(content: &[u32], len: usize) -> TokenSequence {
    let mut ids = content.to_vec();
    ids.resize(len, 0);
    let mut attention_mask = vec![1u8; content.len()];
    attention_mask.resize(len, 0);
    TokenSequence { ids, attention_mask }
}

fn small_bert() -> BertConfig {
    BertConfig {
        vocab_size: 12,
        hidden_size: 8,
        num_hidden_layers: 2,
        num_attention_heads: 2,
        intermediate_size: 16,
        max_position_embeddings: 32,
        type_vocab_size: 2,
        layer_norm_eps: 1e-12,
        hidden_dropout_prob: 0.1,
        attention_probs_dropout_prob: 0.1,
        hidden_act: "gelu".into(),
    }
}

#[test]
fn tiny_encoder_is_deterministic_per_seed() {
    let cfg = EncoderConfig::tiny(32, 16, 7);
    let a = Encoder::load(&cfg).unwrap();
    let b = Encoder::load(&cfg).unwrap();
    assert_eq!(a.flat_values(), b.flat_values());
    let c = Encoder::load(&EncoderConfig::tiny(32, 16, 8)).unwrap();
    assert_ne!(a.flat_values(), c.flat_values());
}

#[test]
fn batch_shape_and_identical_inputs() {
    let enc = Encoder::load(&EncoderConfig::tiny(32, 16, 7)).unwrap();
    let s = seq(&[2, 5, 9, 3], 10);
    let other = seq(&[2, 7, 3], 10);
    let batch: Vec<&TokenSequence> = vec![&s, &other, &s, &s, &other, &s, &s, &other];
    let out = enc.encode(&batch).unwrap();
    assert_eq!(out.len(), 8);
    assert!(out.iter().all(|v| v.len() == 16));
    assert_eq!(out[0], out[2]);
    assert_eq!(out[1], out[4]);
}

#[test]
fn ragged_batch_is_a_shape_error() {
    let enc = Encoder::load(&EncoderConfig::tiny(32, 4, 1)).unwrap();
    let a = seq(&[2, 3], 4);
    let b = seq(&[2, 3], 5);
    assert!(matches!(enc.encode(&[&a, &b]), Err(Error::Shape(_))));
}

#[test]
fn padding_does_not_change_representation() {
    let cfg = BertConfig {
        hidden_dropout_prob: 0.0,
        attention_probs_dropout_prob: 0.0,
        ..small_bert()
    };
    let enc = Encoder::Bert(BertEncoder::random(cfg, 3).unwrap());
    let short = seq(&[2, 5, 6, 3], 4);
    let long = seq(&[2, 5, 6, 3], 32);
    let a = enc.encode(&[&short]).unwrap();
    let b = enc.encode(&[&long]).unwrap();
    assert_eq!(a, b);
    assert!(b[0].values.iter().all(|v| v.is_finite()));
}

#[test]
fn evaluation_mode_is_deterministic() {
    let enc = Encoder::Bert(BertEncoder::random(small_bert(), 3).unwrap());
    let s = seq(&[2, 5, 6, 7, 3], 8);
    assert_eq!(enc.encode(&[&s]).unwrap(), enc.encode(&[&s]).unwrap());
}

/// Scalar probe `sum(w * encode(x))` differentiated through the tiny encoder
/// at 60 random parameter coordinates.
#[test]
fn tiny_encoder_probe_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let enc = Encoder::load(&EncoderConfig::tiny(20, 8, 4)).unwrap();
    let seqs: Vec<TokenSequence> = (0..5)
        .map(|_| {
            let n = rng.gen_range(2..8);
            let ids: Vec<u32> = (0..n).map(|_| rng.gen_range(0..20)).collect();
            seq(&ids, 8)
        })
        .collect();
    let batch: Vec<&TokenSequence> = seqs.iter().collect();
    let w = Array2::from_shape_simple_fn((5, 8), || rng.gen_range(-1.0..1.0));
    let probe = |e: &Encoder| (e.forward(&batch, &mut Mode::Eval).unwrap().0 * &w).sum();

    let mut model = enc.clone();
    let (_, cache) = model.forward(&batch, &mut Mode::Eval).unwrap();
    model.zero_grad();
    model.backward(&cache, &w);
    let grads = model.flat_grads();
    // Only rows of embeddings for tokens that occur have non-zero gradient,
    // so sample among all coordinates including the zero ones.
    for _ in 0..60 {
        let i = rng.gen_range(0..grads.len());
        let mut plus = enc.clone();
        plus.nudge(i, 1e-5);
        let mut minus = enc.clone();
        minus.nudge(i, -1e-5);
        let numeric = (probe(&plus) - probe(&minus)) / 2e-5;
        let err = (grads[i] - numeric).abs() / grads[i].abs().max(numeric.abs()).max(1e-6);
        assert!(err <= 1e-4, "coordinate {i}: {} vs {numeric}", grads[i]);
    }
}

fn write_checkpoint(dir: &std::path::Path, model: &BertEncoder, prefix: &str, legacy: bool, dtype: Dtype) {
    std::fs::write(dir.join(CONFIG_FILE), serde_json::to_string(&model.config).unwrap()).unwrap();
    let tensors = model.export_tensors();
    let mut buffers: BTreeMap<String, (Vec<usize>, Vec<u8>)> = BTreeMap::new();
    for (name, t) in &tensors {
        let mut name = format!("{prefix}{name}");
        if legacy {
            name = name.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta");
        }
        let bytes: Vec<u8> = match dtype {
            Dtype::F32 => t.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect(),
            Dtype::F16 => t.iter().flat_map(|v| f16::from_f64(*v).to_le_bytes()).collect(),
            _ => t.iter().flat_map(|v| v.to_le_bytes()).collect(),
        };
        buffers.insert(name, (t.shape().to_vec(), bytes));
    }
    let views: Vec<(String, TensorView<'_>)> = buffers
        .iter()
        .map(|(n, (shape, bytes))| (n.clone(), TensorView::new(dtype, shape.clone(), bytes).unwrap()))
        .collect();
    safetensors::tensor::serialize_to_file(views, &None, &dir.join(WEIGHTS_FILE)).unwrap();
}

#[test]
fn loads_prefixed_legacy_f32_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let original = BertEncoder::random(small_bert(), 9).unwrap();
    write_checkpoint(dir.path(), &original, "bert.", true, Dtype::F32);
    let loaded = Encoder::load(&EncoderConfig::pretrained(dir.path(), 8)).unwrap();
    assert_eq!(loaded.kind(), EncoderKind::PretrainedCheckpoint);
    assert_eq!(loaded.output_dim(), 8);
    for (a, b) in original.flat_values().iter().zip(loaded.flat_values()) {
        assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0));
    }
}

#[test]
fn loads_half_precision_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let original = BertEncoder::random(small_bert(), 9).unwrap();
    write_checkpoint(dir.path(), &original, "", false, Dtype::F16);
    let loaded = Encoder::load(&EncoderConfig::pretrained(dir.path(), 8)).unwrap();
    assert_eq!(loaded.param_count(), original.param_count());
}

#[test]
fn dimension_mismatch_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    // Descriptor only: the check must fire before weights are read.
    std::fs::write(dir.path().join(CONFIG_FILE), serde_json::to_string(&small_bert()).unwrap()).unwrap();
    let err = Encoder::load(&EncoderConfig::pretrained(dir.path(), 768)).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn descriptor_reports_hidden_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BertConfig {
        hidden_size: 768,
        num_attention_heads: 12,
        intermediate_size: 3072,
        ..small_bert()
    };
    std::fs::write(dir.path().join(CONFIG_FILE), serde_json::to_string(&cfg).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap();
    let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(BertConfig::load(dir.path()).unwrap().hidden_size, raw["hidden_size"].as_u64().unwrap() as usize);
}

#[test]
fn missing_or_corrupt_checkpoint_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let err = Encoder::load(&EncoderConfig::pretrained(&missing, 8)).unwrap_err();
    assert!(matches!(err, Error::Checkpoint { .. }) && err.to_string().contains("nope"));

    std::fs::write(dir.path().join(CONFIG_FILE), serde_json::to_string(&small_bert()).unwrap()).unwrap();
    std::fs::write(dir.path().join(WEIGHTS_FILE), b"garbage").unwrap();
    let err = Encoder::load(&EncoderConfig::pretrained(dir.path(), 8)).unwrap_err();
    assert!(matches!(err, Error::Checkpoint { .. }), "{err}");
    assert!(err.to_string().contains(WEIGHTS_FILE));
}

#[test]
fn pretrained_without_path_is_config_error() {
    let mut cfg = EncoderConfig::pretrained("x", 8);
    cfg.checkpoint_path = None;
    assert!(matches!(Encoder::load(&cfg), Err(Error::Config(_))));
}

#[test]
fn save_and_reload_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for enc in [
        Encoder::load(&EncoderConfig::tiny(16, 4, 2)).unwrap(),
        Encoder::Bert(BertEncoder::random(small_bert(), 1).unwrap()),
    ] {
        let path = dir.path().join(format!("{:?}", enc.kind()));
        enc.save(&path).unwrap();
        assert_eq!(Encoder::load_saved(&path).unwrap(), enc);
    }
}
