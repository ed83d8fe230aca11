//! Writers for the supported formats, used to build fixtures and convert
//! small models between containers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::checkpoint::{encode_header, file_order};
use super::gguf::{value_type, GGML_TYPE_F32, GGUF_DEFAULT_ALIGNMENT, GGUF_MAGIC};
use super::{names, Model, ModelError, TensorInfo, TokenizerFile};

fn write_f32s(w: &mut impl Write, data: &[f32]) -> std::io::Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// The precomputed RoPE tables llama2.c v0 files carry, `[seq_len, head_size/2]`.
fn legacy_freq_table(model: &Model, real: bool) -> Vec<f32> {
    let hs = model.config.head_size();
    let mut out = Vec::with_capacity(model.config.seq_len * hs / 2);
    for pos in 0..model.config.seq_len {
        for i in 0..hs / 2 {
            let freq = 1.0 / 10000f32.powf((2 * i) as f32 / hs as f32);
            let angle = pos as f32 * freq;
            out.push(if real { angle.cos() } else { angle.sin() });
        }
    }
    out
}

/// Writes a llama2.c v0 `.bin` checkpoint. Legacy RoPE tables are taken from
/// the model when present and regenerated otherwise.
pub fn write_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let io = |e| ModelError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(&encode_header(&model.config)).map_err(io)?;
    for info in file_order(&model.config) {
        match model.tensors.get(&info.name) {
            Some(t) => write_f32s(&mut w, &t.data).map_err(io)?,
            None if info.name == names::LEGACY_FREQ_REAL => {
                write_f32s(&mut w, &legacy_freq_table(model, true)).map_err(io)?
            }
            None if info.name == names::LEGACY_FREQ_IMAG => {
                write_f32s(&mut w, &legacy_freq_table(model, false)).map_err(io)?
            }
            None => {
                return Err(ModelError::BadTensor {
                    name: info.name,
                    reason: "missing".into(),
                })
            }
        }
    }
    w.flush().map_err(io)
}

fn put_string(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u64).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn put_u32_kv(buf: &mut Vec<u8>, key: &str, v: u32) {
    put_string(buf, key);
    buf.extend_from_slice(&value_type::U32.to_le_bytes());
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Writes the canonical tensors as a GGUF v3 file with `llama.*` metadata.
/// Legacy llama2.c tables are not carried over.
pub fn write_gguf(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let io = |e| ModelError::io(path, e);
    let c = &model.config;
    let align = GGUF_DEFAULT_ALIGNMENT;
    let tensors: Vec<TensorInfo> = c.canonical_tensors();

    let mut head = Vec::new();
    head.extend_from_slice(GGUF_MAGIC);
    head.extend_from_slice(&3u32.to_le_bytes());
    head.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    head.extend_from_slice(&9u64.to_le_bytes());
    put_string(&mut head, "general.architecture");
    head.extend_from_slice(&value_type::STRING.to_le_bytes());
    put_string(&mut head, "llama");
    put_u32_kv(&mut head, "general.alignment", align as u32);
    put_u32_kv(&mut head, "llama.context_length", c.seq_len as u32);
    put_u32_kv(&mut head, "llama.embedding_length", c.dim as u32);
    put_u32_kv(&mut head, "llama.block_count", c.n_layers as u32);
    put_u32_kv(&mut head, "llama.feed_forward_length", c.hidden_dim as u32);
    put_u32_kv(&mut head, "llama.attention.head_count", c.n_heads as u32);
    put_u32_kv(&mut head, "llama.attention.head_count_kv", c.n_kv_heads as u32);
    put_u32_kv(&mut head, "llama.vocab_size", c.vocab_size as u32);

    let mut offset = 0u64;
    let mut offsets = Vec::with_capacity(tensors.len());
    for t in &tensors {
        put_string(&mut head, &t.name);
        head.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for d in t.shape.iter().rev() {
            head.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        head.extend_from_slice(&GGML_TYPE_F32.to_le_bytes());
        head.extend_from_slice(&offset.to_le_bytes());
        offsets.push(offset);
        offset = (offset + t.numel() as u64 * 4).div_ceil(align) * align;
    }
    let data_start = (head.len() as u64).div_ceil(align) * align;
    head.resize(data_start as usize, 0);

    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(&head).map_err(io)?;
    let mut written = 0u64;
    for (t, off) in tensors.iter().zip(offsets) {
        let pad = (off - written) as usize;
        w.write_all(&vec![0u8; pad]).map_err(io)?;
        let data = &model.tensors[&t.name].data;
        write_f32s(&mut w, data).map_err(io)?;
        written = off + data.len() as u64 * 4;
    }
    w.flush().map_err(io)
}

pub fn write_tokenizer(file: &TokenizerFile, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    std::fs::write(path, file.to_bytes()).map_err(|e| ModelError::io(path, e))
}
