//! llama2.c v0 `.bin` checkpoints.
//!
//! Layout: seven little-endian `i32` header fields
//! `(dim, hidden_dim, n_layers, n_heads, n_kv_heads, vocab_size, seq_len)`
//! followed by fp32 tensors, each stacked over layers where applicable:
//! embedding, attention rmsnorm, wq, wk, wv, wo, ffn rmsnorm, w1, w2, w3,
//! final rmsnorm, two legacy RoPE tables, and the classifier when
//! `vocab_size` was written negative.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::{names, read_f32s, Model, ModelConfig, ModelError, Tensor, TensorInfo};

pub const CHECKPOINT_HEADER_BYTES: u64 = 28;

/// Parses the header into a config. A negative vocab size marks an unshared
/// classifier and is stored as its absolute value.
pub(crate) fn parse_header(header: &[u8; 28]) -> Result<ModelConfig, ModelError> {
    let mut f = [0i32; 7];
    for (i, v) in f.iter_mut().enumerate() {
        *v = i32::from_le_bytes(header[i * 4..i * 4 + 4].try_into().unwrap());
    }
    let [dim, hidden_dim, n_layers, n_heads, n_kv_heads, vocab, seq_len] = f;
    let shared_classifier = vocab > 0;
    let fields = [
        ("dim", dim),
        ("hidden_dim", hidden_dim),
        ("n_layers", n_layers),
        ("n_heads", n_heads),
        ("n_kv_heads", n_kv_heads),
        ("vocab_size", vocab.checked_abs().unwrap_or(0)),
        ("seq_len", seq_len),
    ];
    for (name, v) in fields {
        if v <= 0 {
            return Err(ModelError::InvalidHeader(format!("{name} = {v} is not positive")));
        }
    }
    let config = ModelConfig {
        dim: dim as usize,
        hidden_dim: hidden_dim as usize,
        n_layers: n_layers as usize,
        n_heads: n_heads as usize,
        n_kv_heads: n_kv_heads as usize,
        vocab_size: vocab.unsigned_abs() as usize,
        seq_len: seq_len as usize,
        shared_classifier,
    };
    config.validate()?;
    Ok(config)
}

pub(crate) fn encode_header(config: &ModelConfig) -> [u8; 28] {
    let vocab = if config.shared_classifier {
        config.vocab_size as i32
    } else {
        -(config.vocab_size as i32)
    };
    let fields = [
        config.dim as i32,
        config.hidden_dim as i32,
        config.n_layers as i32,
        config.n_heads as i32,
        config.n_kv_heads as i32,
        vocab,
        config.seq_len as i32,
    ];
    let mut out = [0u8; 28];
    for (i, v) in fields.iter().enumerate() {
        out[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
    }
    out
}

/// Tensors in file order, with the per-layer stacks already split.
pub(crate) fn file_order(config: &ModelConfig) -> Vec<TensorInfo> {
    let (d, h, kv, v) = (config.dim, config.hidden_dim, config.kv_dim(), config.vocab_size);
    let half = config.head_size() / 2;
    type Namer = fn(usize) -> String;
    let stacked: [(Namer, Vec<usize>); 9] = [
        (names::attn_norm, vec![d]),
        (names::attn_q, vec![d, d]),
        (names::attn_k, vec![kv, d]),
        (names::attn_v, vec![kv, d]),
        (names::attn_output, vec![d, d]),
        (names::ffn_norm, vec![d]),
        (names::ffn_gate, vec![h, d]),
        (names::ffn_down, vec![d, h]),
        (names::ffn_up, vec![h, d]),
    ];
    let mut out = vec![TensorInfo {
        name: names::TOKEN_EMBEDDING.into(),
        shape: vec![v, d],
    }];
    for (namer, shape) in stacked {
        for l in 0..config.n_layers {
            out.push(TensorInfo {
                name: namer(l),
                shape: shape.clone(),
            });
        }
    }
    out.push(TensorInfo {
        name: names::OUTPUT_NORM.into(),
        shape: vec![d],
    });
    out.push(TensorInfo {
        name: names::LEGACY_FREQ_REAL.into(),
        shape: vec![config.seq_len, half],
    });
    out.push(TensorInfo {
        name: names::LEGACY_FREQ_IMAG.into(),
        shape: vec![config.seq_len, half],
    });
    if !config.shared_classifier {
        out.push(TensorInfo {
            name: names::CLASSIFIER.into(),
            shape: vec![v, d],
        });
    }
    out
}

/// Reads only the header and file length: config, tensor layout, payload bytes.
pub fn checkpoint_layout(path: impl AsRef<Path>) -> Result<(ModelConfig, Vec<TensorInfo>, u64), ModelError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| ModelError::io(path, e))?;
    let len = file.metadata().map_err(|e| ModelError::io(path, e))?.len();
    let config = read_header(&mut file, len, path)?;
    let layout = file_order(&config);
    let payload: u64 = layout.iter().map(|t| t.numel() as u64 * 4).sum();
    check_length(len, payload)?;
    Ok((config, layout, payload))
}

fn read_header(file: &mut File, len: u64, path: &Path) -> Result<ModelConfig, ModelError> {
    if len < CHECKPOINT_HEADER_BYTES {
        return Err(ModelError::FileTruncated {
            expected: CHECKPOINT_HEADER_BYTES,
            actual: len,
        });
    }
    let mut header = [0u8; 28];
    file.read_exact(&mut header)
        .map_err(|e| ModelError::io(path, e))?;
    parse_header(&header)
}

fn check_length(len: u64, payload: u64) -> Result<(), ModelError> {
    let expected = CHECKPOINT_HEADER_BYTES + payload;
    if len < expected {
        return Err(ModelError::FileTruncated {
            expected,
            actual: len,
        });
    }
    if len > expected {
        return Err(ModelError::Malformed(format!(
            "{} trailing bytes after the last tensor",
            len - expected
        )));
    }
    Ok(())
}

/// Loads a llama2.c `.bin` checkpoint.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let (config, layout, _) = checkpoint_layout(path)?;
    let file = File::open(path).map_err(|e| ModelError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = [0u8; 28];
    reader
        .read_exact(&mut header)
        .map_err(|e| ModelError::io(path, e))?;

    let mut tensors = BTreeMap::new();
    let mut buf = Vec::new();
    for info in layout {
        buf.resize(info.numel() * 4, 0);
        reader.read_exact(&mut buf).map_err(|e| ModelError::io(path, e))?;
        let data = read_f32s(&buf);
        tensors.insert(
            info.name,
            Tensor {
                shape: info.shape,
                data,
            },
        );
    }
    Model::new(config, tensors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_vocab_means_unshared() {
        let mut h = [0u8; 28];
        for (i, v) in [8i32, 32, 1, 2, 2, -16, 4].iter().enumerate() {
            h[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
        }
        let c = parse_header(&h).unwrap();
        assert_eq!(c.vocab_size, 16);
        assert!(!c.shared_classifier);
        assert_eq!(encode_header(&c), h);
    }

    #[test]
    fn zero_field_is_invalid() {
        let mut h = [0u8; 28];
        for (i, v) in [8i32, 0, 1, 2, 2, 16, 4].iter().enumerate() {
            h[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(parse_header(&h), Err(ModelError::InvalidHeader(_))));
    }

    #[test]
    fn file_order_covers_canonical_set() {
        let c = ModelConfig {
            dim: 8,
            hidden_dim: 32,
            n_layers: 2,
            n_heads: 2,
            n_kv_heads: 1,
            vocab_size: 16,
            seq_len: 4,
            shared_classifier: false,
        };
        let order = file_order(&c);
        for t in c.canonical_tensors() {
            assert!(order.contains(&t), "{} missing", t.name);
        }
        assert_eq!(order.len(), c.canonical_tensors().len() + 2);
    }
}
