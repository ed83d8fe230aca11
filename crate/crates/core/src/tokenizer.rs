//! SentencePiece-style BPE over a llama2.c vocabulary.
//!
//! Encoding splits text into UTF-8 code points (falling back to `<0xHH>`
//! byte tokens for anything missing from the vocab), prepends the dummy
//! leading-space piece, then repeatedly merges the adjacent pair whose
//! concatenation has the highest vocab score. Ties go to the leftmost pair.

use std::collections::HashMap;

use thiserror::Error;

use crate::model_io::TokenizerFile;

pub const DEFAULT_BOS_ID: u32 = 1;
pub const DEFAULT_EOS_ID: u32 = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizerError {
    #[error("token id {id} out of range for vocab of {vocab_size}")]
    IdOutOfRange { id: u32, vocab_size: usize },
    #[error("empty vocabulary")]
    EmptyVocab,
}

/// One greedy merge, reported to observers of [`Tokenizer::encode_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep<'a> {
    /// Token ids before the merge, excluding BOS/EOS.
    pub before: &'a [u32],
    /// Index of the left element of the merged pair.
    pub index: usize,
    pub merged_id: u32,
    pub score: f32,
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Vec<Vec<u8>>,
    scores: Vec<f32>,
    lookup: HashMap<Vec<u8>, u32>,
    /// Raw byte for each `<0xHH>` token id.
    byte_of_id: HashMap<u32, u8>,
    /// Token id of `<0xHH>` for each byte value, when present.
    id_of_byte: [Option<u32>; 256],
    byte_pieces: [u8; 256],
    bos_id: u32,
    eos_id: u32,
}

fn parse_byte_token(tok: &[u8]) -> Option<u8> {
    if tok.len() == 6 && tok.starts_with(b"<0x") && tok[5] == b'>' {
        let hex = std::str::from_utf8(&tok[3..5]).ok()?;
        u8::from_str_radix(hex, 16).ok()
    } else {
        None
    }
}

impl Tokenizer {
    pub fn new(file: TokenizerFile) -> Result<Self, TokenizerError> {
        if file.entries.is_empty() {
            return Err(TokenizerError::EmptyVocab);
        }
        let mut vocab = Vec::with_capacity(file.entries.len());
        let mut scores = Vec::with_capacity(file.entries.len());
        let mut lookup = HashMap::with_capacity(file.entries.len());
        let mut byte_of_id = HashMap::new();
        let mut id_of_byte = [None; 256];
        for (id, (score, tok)) in file.entries.into_iter().enumerate() {
            let id = id as u32;
            if let Some(b) = parse_byte_token(&tok) {
                byte_of_id.insert(id, b);
                id_of_byte[b as usize].get_or_insert(id);
            }
            // first occurrence wins for duplicate strings
            lookup.entry(tok.clone()).or_insert(id);
            vocab.push(tok);
            scores.push(score);
        }
        let mut byte_pieces = [0u8; 256];
        for (i, b) in byte_pieces.iter_mut().enumerate() {
            *b = i as u8;
        }
        Ok(Tokenizer {
            vocab,
            scores,
            lookup,
            byte_of_id,
            id_of_byte,
            byte_pieces,
            bos_id: DEFAULT_BOS_ID,
            eos_id: DEFAULT_EOS_ID,
        })
    }

    pub fn with_special_ids(mut self, bos_id: u32, eos_id: u32) -> Self {
        self.bos_id = bos_id;
        self.eos_id = eos_id;
        self
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn bos_id(&self) -> u32 {
        self.bos_id
    }

    pub fn eos_id(&self) -> u32 {
        self.eos_id
    }

    pub fn token(&self, id: u32) -> Option<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice)
    }

    pub fn score(&self, id: u32) -> Option<f32> {
        self.scores.get(id as usize).copied()
    }

    pub fn lookup(&self, piece: &[u8]) -> Option<u32> {
        self.lookup.get(piece).copied()
    }

    /// Id of the `<0xHH>` fallback token for `byte`, if the vocab has one.
    pub fn byte_token(&self, byte: u8) -> Option<u32> {
        self.id_of_byte[byte as usize]
    }

    pub fn encode(&self, text: &str, add_bos: bool, add_eos: bool) -> Vec<u32> {
        self.encode_traced(text, add_bos, add_eos, |_| {})
    }

    /// [`encode`](Self::encode), calling `observe` before every merge.
    pub fn encode_traced(
        &self,
        text: &str,
        add_bos: bool,
        add_eos: bool,
        mut observe: impl FnMut(&MergeStep<'_>),
    ) -> Vec<u32> {
        let mut tokens: Vec<u32> = Vec::with_capacity(text.len() + 1);
        if !text.is_empty() {
            if let Some(space) = self.lookup(b" ") {
                tokens.push(space);
            }
        }
        let mut buf = [0u8; 4];
        for ch in text.chars() {
            let bytes = ch.encode_utf8(&mut buf).as_bytes();
            match self.lookup(bytes) {
                Some(id) => tokens.push(id),
                None => {
                    for &b in bytes {
                        // <unk> (id 0) when the vocab lacks byte tokens
                        tokens.push(self.byte_token(b).unwrap_or(0));
                    }
                }
            }
        }

        let mut pair = Vec::with_capacity(2 * 64);
        loop {
            let mut best: Option<(f32, usize, u32)> = None;
            for i in 0..tokens.len().saturating_sub(1) {
                pair.clear();
                pair.extend_from_slice(&self.vocab[tokens[i] as usize]);
                pair.extend_from_slice(&self.vocab[tokens[i + 1] as usize]);
                if let Some(id) = self.lookup(&pair) {
                    let score = self.scores[id as usize];
                    if best.is_none_or(|(s, _, _)| score > s) {
                        best = Some((score, i, id));
                    }
                }
            }
            let Some((score, index, merged_id)) = best else {
                break;
            };
            observe(&MergeStep {
                before: &tokens,
                index,
                merged_id,
                score,
            });
            tokens[index] = merged_id;
            tokens.remove(index + 1);
        }

        let mut out = Vec::with_capacity(tokens.len() + 2);
        if add_bos {
            out.push(self.bos_id);
        }
        out.extend(tokens);
        if add_eos {
            out.push(self.eos_id);
        }
        out
    }

    /// Bytes for `token` when it follows `prev`. The dummy leading space is
    /// dropped right after BOS, and `<0xHH>` tokens decode to their raw byte.
    pub fn decode(&self, prev: u32, token: u32) -> Result<&[u8], TokenizerError> {
        let vocab_size = self.vocab.len();
        if prev as usize >= vocab_size {
            return Err(TokenizerError::IdOutOfRange { id: prev, vocab_size });
        }
        let piece = self
            .vocab
            .get(token as usize)
            .ok_or(TokenizerError::IdOutOfRange {
                id: token,
                vocab_size,
            })?;
        if let Some(&b) = self.byte_of_id.get(&token) {
            return Ok(std::slice::from_ref(&self.byte_pieces[b as usize]));
        }
        let piece = piece.as_slice();
        if prev == self.bos_id && piece.first() == Some(&b' ') {
            Ok(&piece[1..])
        } else {
            Ok(piece)
        }
    }

    /// Decodes a whole sequence as if it followed BOS. BOS/EOS markers
    /// themselves are skipped.
    pub fn decode_all(&self, tokens: &[u32]) -> Result<String, TokenizerError> {
        let mut bytes = Vec::new();
        let mut prev = self.bos_id;
        for &t in tokens {
            if t == self.bos_id || t == self.eos_id {
                prev = t;
                continue;
            }
            bytes.extend_from_slice(self.decode(prev, t)?);
            prev = t;
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}
