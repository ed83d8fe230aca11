use std::fmt;
use std::path::Path;

use super::{checkpoint_layout, gguf_layout, sniff_format, ModelConfig, ModelError, ModelFormat, TensorInfo};

/// Header-level description of a model file. Building one never reads tensor data.
#[derive(Debug, Clone)]
pub struct ModelSummary {
    pub format: ModelFormat,
    pub config: ModelConfig,
    pub tensors: Vec<TensorInfo>,
    pub payload_bytes: u64,
}

pub fn inspect(path: impl AsRef<Path>) -> Result<ModelSummary, ModelError> {
    let path = path.as_ref();
    let format = sniff_format(path)?;
    let (config, tensors, payload_bytes) = match format {
        ModelFormat::Checkpoint => checkpoint_layout(path)?,
        ModelFormat::Gguf => gguf_layout(path)?,
    };
    Ok(ModelSummary {
        format,
        config,
        tensors,
        payload_bytes,
    })
}

impl fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "format:            {}", self.format)?;
        writeln!(f, "dim:               {}", c.dim)?;
        writeln!(f, "hidden_dim:        {}", c.hidden_dim)?;
        writeln!(f, "n_layers:          {}", c.n_layers)?;
        writeln!(f, "n_heads:           {}", c.n_heads)?;
        writeln!(f, "n_kv_heads:        {}", c.n_kv_heads)?;
        writeln!(f, "vocab_size:        {}", c.vocab_size)?;
        writeln!(f, "seq_len:           {}", c.seq_len)?;
        writeln!(f, "shared_classifier: {}", c.shared_classifier)?;
        writeln!(f, "parameters:        {}", c.parameter_count())?;
        writeln!(f, "payload_bytes:     {}", self.payload_bytes)?;
        writeln!(f, "tensors:")?;
        let width = self.tensors.iter().map(|t| t.name.len()).max().unwrap_or(0);
        for t in &self.tensors {
            writeln!(f, "  {:width$}  {:?}", t.name, t.shape)?;
        }
        Ok(())
    }
}
