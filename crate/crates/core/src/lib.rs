//! CPU-only Llama2-family inference engine and a benchmark harness for
//! comparing LLM inference implementations.
//!
//! The crate is split by concern:
//!
//! - [`model_io`]: llama2.c `.bin` checkpoints, an fp32 GGUF subset, and tokenizer files
//! - [`tokenizer`]: SentencePiece-style BPE encode/decode with byte fallback
//! - [`engine`]: transformer forward pass, KV cache, sampling and generation
//! - [`harness`]: benchmark matrix execution, metrics and statistics
//! - [`report`]: CSV/JSON/Markdown/SVG renderers for benchmark reports

pub mod clock;
pub mod engine;
pub mod fixtures;
pub mod harness;
pub mod model_io;
pub mod report;
pub mod tokenizer;

pub use engine::{
    generate, EngineError, GenerateOptions, GenerationResult, RunState, SamplerSpec, Transformer, Workers,
};
pub use harness::{
    aggregate, compute_metrics, parse_metrics_line, run_matrix, BenchReport, BenchmarkSpec, CellStats, Clock,
    FakeClock, HarnessError, MonotonicClock, RunMetrics,
};
pub use model_io::{load_model, Model, ModelConfig, ModelError, Tensor, TokenizerFile};
pub use report::{Metric, ReportDocument, ReportError, ReportFormat};
pub use tokenizer::{Tokenizer, TokenizerError};
