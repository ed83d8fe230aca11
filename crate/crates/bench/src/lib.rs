//! Shared fixtures for the criterion benches.

use llamabench::fixtures::{ascii_tokenizer, random_model};
use llamabench::{Model, ModelConfig};

/// Roughly stories15M-shaped, but with the small synthetic vocabulary.
pub fn medium_config() -> ModelConfig {
    ModelConfig {
        dim: 288,
        hidden_dim: 768,
        n_layers: 6,
        n_heads: 6,
        n_kv_heads: 6,
        vocab_size: ascii_tokenizer().entries.len(),
        seq_len: 256,
        shared_classifier: true,
    }
}

pub fn medium_model() -> Model {
    random_model(medium_config(), 0xbe7c, 0.1)
}

/// Deterministic pseudo-random vector in [-1, 1).
pub fn vector(len: usize, seed: u64) -> Vec<f32> {
    let mut s = seed | 1;
    (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 40) as f32 / (1u64 << 23) as f32 - 1.0
        })
        .collect()
}

pub const PROSE: &str = "Once upon a time, there was a little girl named Lily. She loved to play \
outside in the park with her friends. One day, she saw a big red ball under a tree and ran to get it.";
