use serde::{Deserialize, Serialize};

use super::{names, ModelError, TensorInfo};

/// Transformer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    /// FFN inner width.
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub n_kv_heads: usize,
    pub vocab_size: usize,
    /// Maximum context length in tokens.
    pub seq_len: usize,
    /// Output head reuses the token embedding table.
    pub shared_classifier: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("dim", self.dim),
            ("hidden_dim", self.hidden_dim),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("n_kv_heads", self.n_kv_heads),
            ("vocab_size", self.vocab_size),
            ("seq_len", self.seq_len),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ModelError::InvalidHeader(format!("{name} must be positive")));
            }
        }
        if !self.n_heads.is_multiple_of(self.n_kv_heads) {
            return Err(ModelError::InvalidHeader(format!(
                "n_heads {} not divisible by n_kv_heads {}",
                self.n_heads, self.n_kv_heads
            )));
        }
        if !self.dim.is_multiple_of(self.n_heads) {
            return Err(ModelError::InvalidHeader(format!(
                "dim {} not divisible by n_heads {}",
                self.dim, self.n_heads
            )));
        }
        if !self.head_size().is_multiple_of(2) {
            return Err(ModelError::InvalidHeader(format!(
                "head size {} must be even for rotary embeddings",
                self.head_size()
            )));
        }
        Ok(())
    }

    pub fn head_size(&self) -> usize {
        self.dim / self.n_heads
    }

    pub fn kv_dim(&self) -> usize {
        self.n_kv_heads * self.head_size()
    }

    /// Every tensor the forward pass needs, with its row-major shape.
    /// Matrices are `[out, in]`.
    pub fn canonical_tensors(&self) -> Vec<TensorInfo> {
        let (d, h, kv, v) = (self.dim, self.hidden_dim, self.kv_dim(), self.vocab_size);
        let mut out = vec![TensorInfo {
            name: names::TOKEN_EMBEDDING.into(),
            shape: vec![v, d],
        }];
        for l in 0..self.n_layers {
            out.extend([
                TensorInfo {
                    name: names::attn_norm(l),
                    shape: vec![d],
                },
                TensorInfo {
                    name: names::attn_q(l),
                    shape: vec![d, d],
                },
                TensorInfo {
                    name: names::attn_k(l),
                    shape: vec![kv, d],
                },
                TensorInfo {
                    name: names::attn_v(l),
                    shape: vec![kv, d],
                },
                TensorInfo {
                    name: names::attn_output(l),
                    shape: vec![d, d],
                },
                TensorInfo {
                    name: names::ffn_norm(l),
                    shape: vec![d],
                },
                TensorInfo {
                    name: names::ffn_gate(l),
                    shape: vec![h, d],
                },
                TensorInfo {
                    name: names::ffn_down(l),
                    shape: vec![d, h],
                },
                TensorInfo {
                    name: names::ffn_up(l),
                    shape: vec![h, d],
                },
            ]);
        }
        out.push(TensorInfo {
            name: names::OUTPUT_NORM.into(),
            shape: vec![d],
        });
        if !self.shared_classifier {
            out.push(TensorInfo {
                name: names::CLASSIFIER.into(),
                shape: vec![v, d],
            });
        }
        out
    }

    /// Number of fp32 parameters in the canonical tensors.
    pub fn parameter_count(&self) -> usize {
        self.canonical_tensors().iter().map(TensorInfo::numel).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelConfig {
        ModelConfig {
            dim: 8,
            hidden_dim: 32,
            n_layers: 1,
            n_heads: 2,
            n_kv_heads: 2,
            vocab_size: 16,
            seq_len: 4,
            shared_classifier: true,
        }
    }

    #[test]
    fn accepts_valid_config() {
        base().validate().unwrap();
        assert_eq!(base().head_size(), 4);
    }

    #[test]
    fn rejects_bad_ratios() {
        let mut c = base();
        c.n_kv_heads = 3;
        assert!(c.validate().is_err());
        let mut c = base();
        c.dim = 6;
        c.n_heads = 2; // head size 3 is odd
        c.n_kv_heads = 1;
        assert!(matches!(c.validate(), Err(ModelError::InvalidHeader(m)) if m.contains("even")));
        let mut c = base();
        c.seq_len = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gqa_kv_dim() {
        let c = ModelConfig {
            n_heads: 4,
            n_kv_heads: 2,
            ..base()
        };
        assert_eq!(c.kv_dim(), 4);
        let k = c
            .canonical_tensors()
            .into_iter()
            .find(|t| t.name == names::attn_k(0))
            .unwrap();
        assert_eq!(k.shape, vec![4, 8]);
    }
}
