use std::fs;
use std::path::Path;

use super::ModelError;

/// Raw contents of a llama2.c `tokenizer.bin`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerFile {
    pub max_token_length: usize,
    /// `(merge score, token bytes)` in id order.
    pub entries: Vec<(f32, Vec<u8>)>,
}

/// Reads `i32 max_token_length`, then `vocab_size` records of
/// `(f32 score, i32 len, len bytes)`, all little-endian.
pub fn load_tokenizer(path: impl AsRef<Path>, vocab_size: usize) -> Result<TokenizerFile, ModelError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ModelError::io(path, e))?;
    parse_tokenizer(&bytes, vocab_size)
}

pub(crate) fn parse_tokenizer(bytes: &[u8], vocab_size: usize) -> Result<TokenizerFile, ModelError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], ModelError> {
        let end = *pos + n;
        if end > bytes.len() {
            return Err(ModelError::FileTruncated {
                expected: end as u64,
                actual: bytes.len() as u64,
            });
        }
        let s = &bytes[*pos..end];
        *pos = end;
        Ok(s)
    };
    let max = i32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if max < 0 {
        return Err(ModelError::InvalidHeader(format!(
            "max_token_length {max} is negative"
        )));
    }
    let max = max as usize;
    let mut entries = Vec::with_capacity(vocab_size);
    for index in 0..vocab_size {
        let score = f32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        let len = i32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if len < 0 {
            return Err(ModelError::Malformed(format!(
                "token {index}: negative length {len}"
            )));
        }
        let len = len as usize;
        if len > max {
            return Err(ModelError::LengthMismatch { index, len, max });
        }
        entries.push((score, take(&mut pos, len)?.to_vec()));
    }
    Ok(TokenizerFile {
        max_token_length: max,
        entries,
    })
}

impl TokenizerFile {
    pub(crate) fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.max_token_length as i32).to_le_bytes().to_vec();
        for (score, tok) in &self.entries {
            out.extend_from_slice(&score.to_le_bytes());
            out.extend_from_slice(&(tok.len() as i32).to_le_bytes());
            out.extend_from_slice(tok);
        }
        out
    }
}
