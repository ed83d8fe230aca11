//! Model checkpoint and tokenizer file formats.
//!
//! Two weight containers are understood: the llama2.c v0 `.bin` layout and a
//! GGUF subset restricted to fp32 tensors. Both decode into the same [`Model`],
//! keyed by the canonical tensor names in [`names`].

mod checkpoint;
mod config;
mod gguf;
mod inspect;
mod tokenizer_file;
mod writer;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use checkpoint::{checkpoint_layout, load_checkpoint, CHECKPOINT_HEADER_BYTES};
pub use config::ModelConfig;
pub use gguf::{
    gguf_layout, load_gguf, read_gguf_header, GgufHeader, MetaValue, GGUF_DEFAULT_ALIGNMENT, GGUF_MAGIC,
};
pub use inspect::{inspect, ModelSummary};
pub use tokenizer_file::{load_tokenizer, TokenizerFile};
pub use writer::{write_checkpoint, write_gguf, write_tokenizer};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file truncated: expected {expected} bytes, found {actual}")]
    FileTruncated { expected: u64, actual: u64 },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("bad magic {0:02x?}, expected \"GGUF\"")]
    BadMagic([u8; 4]),
    #[error("unsupported GGUF version {0} (supported: 2, 3)")]
    UnsupportedVersion(u32),
    #[error("tensor {name}: unsupported tensor type {type_id} (only F32 is accepted)")]
    UnsupportedTensorType { name: String, type_id: u32 },
    #[error("missing metadata key {0}")]
    MissingMetadata(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("token {index}: length {len} exceeds max_token_length {max}")]
    LengthMismatch { index: usize, len: usize, max: usize },
    #[error("tensor {name}: {reason}")]
    BadTensor { name: String, reason: String },
}

impl ModelError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Canonical tensor names, following the llama.cpp GGUF convention.
pub mod names {
    pub const TOKEN_EMBEDDING: &str = "token_embd.weight";
    pub const OUTPUT_NORM: &str = "output_norm.weight";
    pub const CLASSIFIER: &str = "output.weight";
    /// llama2.c v0 checkpoints carry precomputed RoPE tables that the engine ignores.
    pub const LEGACY_FREQ_REAL: &str = "legacy.freq_cis_real";
    pub const LEGACY_FREQ_IMAG: &str = "legacy.freq_cis_imag";

    pub fn attn_norm(layer: usize) -> String {
        format!("blk.{layer}.attn_norm.weight")
    }
    pub fn attn_q(layer: usize) -> String {
        format!("blk.{layer}.attn_q.weight")
    }
    pub fn attn_k(layer: usize) -> String {
        format!("blk.{layer}.attn_k.weight")
    }
    pub fn attn_v(layer: usize) -> String {
        format!("blk.{layer}.attn_v.weight")
    }
    pub fn attn_output(layer: usize) -> String {
        format!("blk.{layer}.attn_output.weight")
    }
    pub fn ffn_norm(layer: usize) -> String {
        format!("blk.{layer}.ffn_norm.weight")
    }
    /// `w1` in llama2.c.
    pub fn ffn_gate(layer: usize) -> String {
        format!("blk.{layer}.ffn_gate.weight")
    }
    /// `w2` in llama2.c.
    pub fn ffn_down(layer: usize) -> String {
        format!("blk.{layer}.ffn_down.weight")
    }
    /// `w3` in llama2.c.
    pub fn ffn_up(layer: usize) -> String {
        format!("blk.{layer}.ffn_up.weight")
    }
}

/// A dense fp32 tensor. `shape` is row-major, outermost dimension first.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, ModelError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(ModelError::BadTensor {
                name: String::from("<anonymous>"),
                reason: format!("shape {shape:?} implies {n} elements, got {}", data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Tensor name and shape without data, used for layouts and summaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorInfo {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Which on-disk container a model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Checkpoint,
    Gguf,
}

impl std::fmt::Display for ModelFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelFormat::Checkpoint => f.write_str("llama2.c checkpoint"),
            ModelFormat::Gguf => f.write_str("GGUF (fp32)"),
        }
    }
}

/// Transformer hyperparameters plus all fp32 weights, keyed by canonical name.
///
/// Immutable after loading; share it across threads by reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub tensors: BTreeMap<String, Tensor>,
}

impl Model {
    /// Builds a model, checking that every canonical tensor is present with
    /// the shape implied by `config`.
    pub fn new(config: ModelConfig, tensors: BTreeMap<String, Tensor>) -> Result<Self, ModelError> {
        config.validate()?;
        for info in config.canonical_tensors() {
            let t = tensors.get(&info.name).ok_or_else(|| ModelError::BadTensor {
                name: info.name.clone(),
                reason: "missing".into(),
            })?;
            if t.shape != info.shape {
                return Err(ModelError::BadTensor {
                    name: info.name.clone(),
                    reason: format!("shape {:?}, expected {:?}", t.shape, info.shape),
                });
            }
            if t.data.len() != info.numel() {
                return Err(ModelError::BadTensor {
                    name: info.name,
                    reason: format!(
                        "{} elements, expected {}",
                        t.data.len(),
                        t.shape.iter().product::<usize>()
                    ),
                });
            }
        }
        Ok(Model { config, tensors })
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    /// The classifier weights, which alias the embedding table when shared.
    pub fn classifier(&self) -> &Tensor {
        if self.config.shared_classifier {
            &self.tensors[names::TOKEN_EMBEDDING]
        } else {
            &self.tensors[names::CLASSIFIER]
        }
    }

    /// Total bytes of fp32 weight data held, including legacy tables.
    pub fn weight_bytes(&self) -> u64 {
        self.tensors.values().map(|t| t.numel() as u64 * 4).sum()
    }
}

/// Loads a model, choosing the container by its leading magic bytes.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    match sniff_format(path)? {
        ModelFormat::Gguf => load_gguf(path),
        ModelFormat::Checkpoint => load_checkpoint(path),
    }
}

pub fn sniff_format(path: &Path) -> Result<ModelFormat, ModelError> {
    let mut file = File::open(path).map_err(|e| ModelError::io(path, e))?;
    let mut magic = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match file
            .read(&mut magic[filled..])
            .map_err(|e| ModelError::io(path, e))?
        {
            0 => break,
            n => filled += n,
        }
    }
    if filled == 4 && &magic == GGUF_MAGIC {
        Ok(ModelFormat::Gguf)
    } else {
        Ok(ModelFormat::Checkpoint)
    }
}

pub(crate) fn read_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}
