//! Synthetic models and vocabularies for tests, benchmarks and smoke runs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model_io::{Model, ModelConfig, Tensor, TokenizerFile};

/// A model with every weight drawn uniformly from `[-scale, scale]` and
/// norm gains drawn from `[1 - scale, 1 + scale]`, reproducible from `seed`.
pub fn random_model(config: ModelConfig, seed: u64, scale: f32) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = BTreeMap::new();
    for info in config.canonical_tensors() {
        let is_norm = info.shape.len() == 1;
        let data = (0..info.numel())
            .map(|_| {
                let v = rng.gen_range(-scale..=scale);
                if is_norm {
                    1.0 + v
                } else {
                    v
                }
            })
            .collect();
        tensors.insert(
            info.name,
            Tensor {
                shape: info.shape,
                data,
            },
        );
    }
    Model::new(config, tensors).expect("canonical tensors always match config")
}

pub fn zero_model(config: ModelConfig) -> Model {
    let tensors = config
        .canonical_tensors()
        .into_iter()
        .map(|info| (info.name, Tensor::zeros(info.shape)))
        .collect();
    Model::new(config, tensors).expect("canonical tensors always match config")
}

const MERGES: &[&str] = &[
    "he", " t", "th", " th", " the", "in", "er", "an", " a", "on", "re", "ll", "or", "en", "ed", " w", "ing",
    " s", "nd", " and", " o", "ou", "lo", "el", "hel", "hell", "hello", " hello", "wor", " wor", "ld",
    "world", " world", "it", " i", "is", " is", "at", " b", " c", "es", "ce", "up", "on ", " time", "ti",
    "me", "im", "ime", "Once", " up", "pon", " upon",
];

/// A SentencePiece-shaped vocabulary in llama2.c layout: `<unk>`, BOS, EOS,
/// 256 `<0xHH>` byte tokens, every printable ASCII character, then a few
/// English merges with descending scores.
pub fn ascii_tokenizer() -> TokenizerFile {
    let mut entries: Vec<(f32, Vec<u8>)> = vec![
        (0.0, b"<unk>".to_vec()),
        (0.0, b"\n<s>\n".to_vec()),
        (0.0, b"\n</s>\n".to_vec()),
    ];
    for b in 0..=255u8 {
        entries.push((0.0, format!("<0x{b:02X}>").into_bytes()));
    }
    for c in 0x20u8..0x7f {
        entries.push((-1000.0, vec![c]));
    }
    for (i, m) in MERGES.iter().enumerate() {
        entries.push((-(i as f32), m.as_bytes().to_vec()));
    }
    let max_token_length = entries.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    TokenizerFile {
        max_token_length,
        entries,
    }
}

/// A small config sized to [`ascii_tokenizer`], suitable for generation tests.
pub fn tiny_config(seq_len: usize) -> ModelConfig {
    ModelConfig {
        dim: 32,
        hidden_dim: 64,
        n_layers: 2,
        n_heads: 4,
        n_kv_heads: 2,
        vocab_size: ascii_tokenizer().entries.len(),
        seq_len,
        shared_classifier: true,
    }
}
