use crate::model_io::{names, Model, ModelConfig};

use super::ops::{rmsnorm, rope_apply, silu, softmax};
use super::{EngineError, Workers};

pub const DEFAULT_NORM_EPS: f32 = 1e-5;
pub const DEFAULT_ROPE_THETA: f32 = 10000.0;

struct LayerWeights<'m> {
    attn_norm: &'m [f32],
    wq: &'m [f32],
    wk: &'m [f32],
    wv: &'m [f32],
    wo: &'m [f32],
    ffn_norm: &'m [f32],
    w1: &'m [f32],
    w2: &'m [f32],
    w3: &'m [f32],
}

/// Activation buffers and the KV cache for one generation stream.
#[derive(Debug, Clone)]
pub struct RunState {
    x: Vec<f32>,
    xb: Vec<f32>,
    xb2: Vec<f32>,
    hb: Vec<f32>,
    hb2: Vec<f32>,
    q: Vec<f32>,
    /// `[n_heads, seq_len]` attention weights of the most recent layer.
    att: Vec<f32>,
    logits: Vec<f32>,
    /// `[n_layers, seq_len, kv_dim]`
    key_cache: Vec<f32>,
    value_cache: Vec<f32>,
    seq_len: usize,
    /// Number of positions written to the cache so far.
    pos: usize,
}

impl RunState {
    pub fn new(config: &ModelConfig) -> Self {
        let cache = config.n_layers * config.seq_len * config.kv_dim();
        RunState {
            x: vec![0.0; config.dim],
            xb: vec![0.0; config.dim],
            xb2: vec![0.0; config.dim],
            hb: vec![0.0; config.hidden_dim],
            hb2: vec![0.0; config.hidden_dim],
            q: vec![0.0; config.dim],
            att: vec![0.0; config.n_heads * config.seq_len],
            logits: vec![0.0; config.vocab_size],
            key_cache: vec![0.0; cache],
            value_cache: vec![0.0; cache],
            seq_len: config.seq_len,
            pos: 0,
        }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn logits(&self) -> &[f32] {
        &self.logits
    }

    /// Post-softmax attention weights of `head` in the last layer, over
    /// positions `0..=pos` of the latest forward call.
    pub fn attention(&self, head: usize) -> &[f32] {
        let start = head * self.seq_len;
        &self.att[start..start + self.pos]
    }
}

/// A model bound to a worker pool, ready to run forward passes.
pub struct Transformer<'m> {
    config: ModelConfig,
    embedding: &'m [f32],
    layers: Vec<LayerWeights<'m>>,
    final_norm: &'m [f32],
    classifier: &'m [f32],
    workers: Workers,
    norm_eps: f32,
    rope_theta: f32,
}

impl<'m> Transformer<'m> {
    pub fn new(model: &'m Model, threads: usize) -> Result<Self, EngineError> {
        let get = |name: &str| -> Result<&'m [f32], EngineError> {
            model
                .tensor(name)
                .map(|t| t.data.as_slice())
                .ok_or_else(|| EngineError::MissingTensor(name.to_string()))
        };
        let layers = (0..model.config.n_layers)
            .map(|l| {
                Ok(LayerWeights {
                    attn_norm: get(&names::attn_norm(l))?,
                    wq: get(&names::attn_q(l))?,
                    wk: get(&names::attn_k(l))?,
                    wv: get(&names::attn_v(l))?,
                    wo: get(&names::attn_output(l))?,
                    ffn_norm: get(&names::ffn_norm(l))?,
                    w1: get(&names::ffn_gate(l))?,
                    w2: get(&names::ffn_down(l))?,
                    w3: get(&names::ffn_up(l))?,
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        let classifier = if model.config.shared_classifier {
            get(names::TOKEN_EMBEDDING)?
        } else {
            get(names::CLASSIFIER)?
        };
        Ok(Transformer {
            config: model.config,
            embedding: get(names::TOKEN_EMBEDDING)?,
            layers,
            final_norm: get(names::OUTPUT_NORM)?,
            classifier,
            workers: Workers::new(threads)?,
            norm_eps: DEFAULT_NORM_EPS,
            rope_theta: DEFAULT_ROPE_THETA,
        })
    }

    pub fn with_norm_eps(mut self, eps: f32) -> Self {
        self.norm_eps = eps;
        self
    }

    pub fn with_rope_theta(mut self, theta: f32) -> Self {
        self.rope_theta = theta;
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn threads(&self) -> usize {
        self.workers.threads()
    }

    pub fn new_state(&self) -> RunState {
        RunState::new(&self.config)
    }

    /// Runs one token at `pos` through the network, appending its keys and
    /// values to the cache, and returns the logits.
    pub fn forward<'s>(
        &self,
        state: &'s mut RunState,
        token: u32,
        pos: usize,
    ) -> Result<&'s [f32], EngineError> {
        let c = &self.config;
        if pos >= c.seq_len {
            return Err(EngineError::PositionOverflow {
                pos,
                seq_len: c.seq_len,
            });
        }
        if token as usize >= c.vocab_size {
            return Err(EngineError::TokenOutOfRange {
                token,
                vocab_size: c.vocab_size,
            });
        }
        if state.x.len() != c.dim || state.key_cache.len() != c.n_layers * c.seq_len * c.kv_dim() {
            return Err(EngineError::ShapeMismatch(
                "run state built for another config".into(),
            ));
        }
        let dim = c.dim;
        let kv_dim = c.kv_dim();
        let head_size = c.head_size();
        let kv_mul = c.n_heads / c.n_kv_heads;
        let seq_len = c.seq_len;
        let w = &self.workers;

        let t = token as usize;
        state.x.copy_from_slice(&self.embedding[t * dim..(t + 1) * dim]);

        for (l, layer) in self.layers.iter().enumerate() {
            rmsnorm(&mut state.xb, &state.x, layer.attn_norm, self.norm_eps);

            let layer_off = l * seq_len * kv_dim;
            let row = layer_off + pos * kv_dim;
            w.matmul(&mut state.q, layer.wq, &state.xb)?;
            w.matmul(&mut state.key_cache[row..row + kv_dim], layer.wk, &state.xb)?;
            w.matmul(&mut state.value_cache[row..row + kv_dim], layer.wv, &state.xb)?;
            rope_apply(
                &mut state.q,
                &mut state.key_cache[row..row + kv_dim],
                pos,
                head_size,
                self.rope_theta,
            );

            let keys = &state.key_cache[layer_off..layer_off + (pos + 1) * kv_dim];
            let values = &state.value_cache[layer_off..layer_off + (pos + 1) * kv_dim];
            let q = &state.q;
            let scale = (head_size as f32).sqrt();
            let mut heads: Vec<(usize, &mut [f32], &mut [f32])> = state
                .att
                .chunks_mut(seq_len)
                .zip(state.xb.chunks_mut(head_size))
                .enumerate()
                .map(|(h, (att, out))| (h, att, out))
                .collect();
            w.run(&mut heads, |(h, att, out)| {
                let h = *h;
                let q_h = &q[h * head_size..(h + 1) * head_size];
                let kv_off = (h / kv_mul) * head_size;
                let att = &mut att[..=pos];
                for (ts, a) in att.iter_mut().enumerate() {
                    let k = &keys[ts * kv_dim + kv_off..ts * kv_dim + kv_off + head_size];
                    let mut score = 0.0f32;
                    for (qi, ki) in q_h.iter().zip(k) {
                        score += qi * ki;
                    }
                    *a = score / scale;
                }
                softmax(att);
                out.fill(0.0);
                for (ts, a) in att.iter().enumerate() {
                    let v = &values[ts * kv_dim + kv_off..ts * kv_dim + kv_off + head_size];
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += a * vi;
                    }
                }
            });

            w.matmul(&mut state.xb2, layer.wo, &state.xb)?;
            for (x, d) in state.x.iter_mut().zip(&state.xb2) {
                *x += d;
            }

            rmsnorm(&mut state.xb, &state.x, layer.ffn_norm, self.norm_eps);
            w.matmul(&mut state.hb, layer.w1, &state.xb)?;
            w.matmul(&mut state.hb2, layer.w3, &state.xb)?;
            for (g, u) in state.hb.iter_mut().zip(&state.hb2) {
                *g = silu(*g) * u;
            }
            w.matmul(&mut state.xb, layer.w2, &state.hb)?;
            for (x, d) in state.x.iter_mut().zip(&state.xb) {
                *x += d;
            }
        }

        rmsnorm(&mut state.xb, &state.x, self.final_norm, self.norm_eps);
        w.matmul(&mut state.logits, self.classifier, &state.xb)?;
        state.pos = pos + 1;
        Ok(&state.logits)
    }
}
