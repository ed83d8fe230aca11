//! fp32-only subset of the GGUF container (versions 2 and 3).
//!
//! Config is taken from the `<arch>.*` key family (`general.architecture`,
//! normally `llama`). Tensor dimensions are stored innermost-first on disk and
//! reversed into row-major shapes here.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use super::{names, read_f32s, Model, ModelConfig, ModelError, Tensor, TensorInfo};

pub const GGUF_MAGIC: &[u8; 4] = b"GGUF";
pub const GGUF_DEFAULT_ALIGNMENT: u64 = 32;
pub(crate) const GGML_TYPE_F32: u32 = 0;

pub(crate) mod value_type {
    pub const U8: u32 = 0;
    pub const I8: u32 = 1;
    pub const U16: u32 = 2;
    pub const I16: u32 = 3;
    pub const U32: u32 = 4;
    pub const I32: u32 = 5;
    pub const F32: u32 = 6;
    pub const BOOL: u32 = 7;
    pub const STRING: u32 = 8;
    pub const ARRAY: u32 = 9;
    pub const U64: u32 = 10;
    pub const I64: u32 = 11;
    pub const F64: u32 = 12;
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetaValue {
    Int(i128),
    Float(f64),
    Bool(bool),
    Str(String),
    Array(Vec<MetaValue>),
}

impl MetaValue {
    fn as_count(&self) -> Option<usize> {
        match self {
            MetaValue::Int(v) if *v > 0 => usize::try_from(*v).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct RawTensorInfo {
    name: String,
    shape: Vec<usize>,
    type_id: u32,
    offset: u64,
}

/// Parsed GGUF header: metadata, tensor directory, data-region offset.
#[derive(Debug, Clone)]
pub struct GgufHeader {
    pub version: u32,
    pub metadata: HashMap<String, MetaValue>,
    tensors: Vec<RawTensorInfo>,
    pub data_offset: u64,
    pub file_len: u64,
}

struct Cursor<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, ModelError> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                ModelError::Malformed(format!("unexpected end of header at byte {}", self.pos))
            } else {
                ModelError::Malformed(e.to_string())
            }
        })?;
        self.pos += n as u64;
        Ok(buf)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        Ok(self.bytes(N)?.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, ModelError> {
        let len = self.u64()?;
        if len > (1 << 24) {
            return Err(ModelError::Malformed(format!(
                "string length {len} is implausible"
            )));
        }
        let raw = self.bytes(len as usize)?;
        String::from_utf8(raw).map_err(|_| ModelError::Malformed("non-UTF-8 string".into()))
    }

    fn value(&mut self, ty: u32) -> Result<MetaValue, ModelError> {
        use value_type::*;
        Ok(match ty {
            U8 => MetaValue::Int(self.array::<1>()?[0] as i128),
            I8 => MetaValue::Int(self.array::<1>()?[0] as i8 as i128),
            U16 => MetaValue::Int(u16::from_le_bytes(self.array()?) as i128),
            I16 => MetaValue::Int(i16::from_le_bytes(self.array()?) as i128),
            U32 => MetaValue::Int(self.u32()? as i128),
            I32 => MetaValue::Int(i32::from_le_bytes(self.array()?) as i128),
            U64 => MetaValue::Int(self.u64()? as i128),
            I64 => MetaValue::Int(i64::from_le_bytes(self.array()?) as i128),
            F32 => MetaValue::Float(f32::from_le_bytes(self.array()?) as f64),
            F64 => MetaValue::Float(f64::from_le_bytes(self.array()?)),
            BOOL => MetaValue::Bool(self.array::<1>()?[0] != 0),
            STRING => MetaValue::Str(self.string()?),
            ARRAY => {
                let elem = self.u32()?;
                let count = self.u64()?;
                if count > (1 << 26) {
                    return Err(ModelError::Malformed(format!(
                        "array length {count} is implausible"
                    )));
                }
                let mut items = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    items.push(self.value(elem)?);
                }
                MetaValue::Array(items)
            }
            other => {
                return Err(ModelError::Malformed(format!(
                    "unknown metadata value type {other}"
                )))
            }
        })
    }
}

fn align_up(v: u64, align: u64) -> u64 {
    v.div_ceil(align) * align
}

/// Parses magic, version, metadata and tensor infos; no tensor data is read.
pub fn read_gguf_header(path: impl AsRef<Path>) -> Result<GgufHeader, ModelError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ModelError::io(path, e))?;
    let file_len = file.metadata().map_err(|e| ModelError::io(path, e))?.len();
    let mut cur = Cursor {
        inner: BufReader::new(file),
        pos: 0,
    };
    if file_len < 4 {
        return Err(ModelError::FileTruncated {
            expected: 4,
            actual: file_len,
        });
    }
    let magic: [u8; 4] = cur.array()?;
    if &magic != GGUF_MAGIC {
        return Err(ModelError::BadMagic(magic));
    }
    let version = cur.u32()?;
    if !(2..=3).contains(&version) {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let n_tensors = cur.u64()?;
    let n_kv = cur.u64()?;
    let mut metadata = HashMap::new();
    for _ in 0..n_kv {
        let key = cur.string()?;
        let ty = cur.u32()?;
        let value = cur.value(ty)?;
        metadata.insert(key, value);
    }
    let mut tensors = Vec::new();
    for _ in 0..n_tensors {
        let name = cur.string()?;
        let n_dims = cur.u32()?;
        if n_dims == 0 || n_dims > 4 {
            return Err(ModelError::Malformed(format!(
                "tensor {name}: {n_dims} dimensions"
            )));
        }
        let mut dims = Vec::with_capacity(n_dims as usize);
        for _ in 0..n_dims {
            dims.push(cur.u64()? as usize);
        }
        dims.reverse();
        let type_id = cur.u32()?;
        let offset = cur.u64()?;
        tensors.push(RawTensorInfo {
            name,
            shape: dims,
            type_id,
            offset,
        });
    }
    let alignment = match metadata.get("general.alignment") {
        Some(v) => v
            .as_count()
            .filter(|a| a.is_power_of_two())
            .ok_or_else(|| ModelError::Malformed("general.alignment must be a power of two".into()))?
            as u64,
        None => GGUF_DEFAULT_ALIGNMENT,
    };
    let data_offset = align_up(cur.pos, alignment);
    for t in &tensors {
        if t.type_id != GGML_TYPE_F32 {
            return Err(ModelError::UnsupportedTensorType {
                name: t.name.clone(),
                type_id: t.type_id,
            });
        }
        if t.offset % alignment != 0 {
            return Err(ModelError::Malformed(format!(
                "tensor {} offset {} not aligned to {alignment}",
                t.name, t.offset
            )));
        }
        let end = data_offset + t.offset + t.shape.iter().product::<usize>() as u64 * 4;
        if end > file_len {
            return Err(ModelError::FileTruncated {
                expected: end,
                actual: file_len,
            });
        }
    }
    Ok(GgufHeader {
        version,
        metadata,
        tensors,
        data_offset,
        file_len,
    })
}

impl GgufHeader {
    fn arch(&self) -> Result<&str, ModelError> {
        match self.metadata.get("general.architecture") {
            Some(MetaValue::Str(s)) => Ok(s),
            _ => Err(ModelError::MissingMetadata("general.architecture".into())),
        }
    }

    fn count(&self, key: &str) -> Result<usize, ModelError> {
        match self.metadata.get(key) {
            Some(v) => v
                .as_count()
                .ok_or_else(|| ModelError::InvalidHeader(format!("{key} must be a positive integer"))),
            None => Err(ModelError::MissingMetadata(key.into())),
        }
    }

    /// Maps the `<arch>.*` metadata onto a [`ModelConfig`].
    pub fn config(&self) -> Result<ModelConfig, ModelError> {
        let arch = self.arch()?;
        let key = |k: &str| format!("{arch}.{k}");
        let n_heads = self.count(&key("attention.head_count"))?;
        let n_kv_heads = match self.count(&key("attention.head_count_kv")) {
            Err(ModelError::MissingMetadata(_)) => n_heads,
            other => other?,
        };
        let vocab_size = match self.count(&key("vocab_size")) {
            Err(ModelError::MissingMetadata(_)) => self.inferred_vocab()?,
            other => other?,
        };
        let config = ModelConfig {
            dim: self.count(&key("embedding_length"))?,
            hidden_dim: self.count(&key("feed_forward_length"))?,
            n_layers: self.count(&key("block_count"))?,
            n_heads,
            n_kv_heads,
            vocab_size,
            seq_len: self.count(&key("context_length"))?,
            shared_classifier: !self.tensors.iter().any(|t| t.name == names::CLASSIFIER),
        };
        config.validate()?;
        Ok(config)
    }

    fn inferred_vocab(&self) -> Result<usize, ModelError> {
        if let Some(MetaValue::Array(tokens)) = self.metadata.get("tokenizer.ggml.tokens") {
            return Ok(tokens.len());
        }
        self.tensors
            .iter()
            .find(|t| t.name == names::TOKEN_EMBEDDING)
            .and_then(|t| t.shape.first().copied())
            .ok_or_else(|| ModelError::MissingMetadata("llama.vocab_size".into()))
    }

    pub fn tensor_infos(&self) -> Vec<TensorInfo> {
        self.tensors
            .iter()
            .map(|t| TensorInfo {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect()
    }

    /// Bytes of tensor data, excluding alignment padding.
    pub fn payload_bytes(&self) -> u64 {
        self.tensors
            .iter()
            .map(|t| t.shape.iter().product::<usize>() as u64 * 4)
            .sum()
    }
}

/// Header-only view: config, tensor layout and payload bytes.
pub fn gguf_layout(path: impl AsRef<Path>) -> Result<(ModelConfig, Vec<TensorInfo>, u64), ModelError> {
    let header = read_gguf_header(path)?;
    Ok((header.config()?, header.tensor_infos(), header.payload_bytes()))
}

/// Loads an fp32 GGUF model.
pub fn load_gguf(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let header = read_gguf_header(path)?;
    let config = header.config()?;
    let mut file = BufReader::new(File::open(path).map_err(|e| ModelError::io(path, e))?);
    let mut tensors = BTreeMap::new();
    let mut buf = Vec::new();
    for t in &header.tensors {
        let n: usize = t.shape.iter().product();
        file.seek(SeekFrom::Start(header.data_offset + t.offset))
            .map_err(|e| ModelError::io(path, e))?;
        buf.resize(n * 4, 0);
        file.read_exact(&mut buf).map_err(|e| ModelError::io(path, e))?;
        let tensor = Tensor {
            shape: t.shape.clone(),
            data: read_f32s(&buf),
        };
        if tensors.insert(t.name.clone(), tensor).is_some() {
            return Err(ModelError::Malformed(format!("duplicate tensor {}", t.name)));
        }
    }
    Model::new(config, tensors)
}
