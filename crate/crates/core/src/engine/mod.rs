//! Llama2 forward pass, sampling and text generation on the CPU.

mod generate;
mod ops;
mod sampler;
mod transformer;
mod workers;

use thiserror::Error;

pub use generate::{generate, GenerateOptions, GenerationResult};
pub use ops::{rmsnorm, rope_apply, silu, softmax};
pub use sampler::{Sampler, SamplerMode, SamplerSpec, XorShiftRng};
pub use transformer::{RunState, Transformer, DEFAULT_NORM_EPS, DEFAULT_ROPE_THETA};
pub use workers::Workers;

use crate::tokenizer::TokenizerError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("position {pos} exceeds context length {seq_len}")]
    PositionOverflow { pos: usize, seq_len: usize },
    #[error("token id {token} out of range for vocab of {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: usize },
    #[error("prompt encodes to {tokens} tokens, context length is {seq_len}")]
    PromptTooLong { tokens: usize, seq_len: usize },
    #[error("steps {steps} exceed context length {seq_len}")]
    StepsTooLarge { steps: usize, seq_len: usize },
    #[error("thread count must be at least 1")]
    InvalidThreads,
    #[error("tokenizer has {tokenizer} entries but the model vocab is {model}")]
    VocabMismatch { tokenizer: usize, model: usize },
    #[error("model is missing tensor {0}")]
    MissingTensor(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}
