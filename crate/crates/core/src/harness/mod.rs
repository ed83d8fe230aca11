//! Benchmark matrix execution: targets × models × thread counts, with
//! warmup runs discarded and measured runs aggregated per cell.

mod env;
mod memory;
mod metrics;
mod runner;
mod spec;
mod stats;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::clock::{Clock, FakeClock, MonotonicClock};
pub use env::EnvironmentRecord;
pub use memory::{measure_peak_memory, reset_self_peak_rss, run_and_measure, self_peak_rss, ChildOutcome};
pub use metrics::{compute_metrics, format_metrics_line, parse_metrics_line, RunMetrics};
pub use runner::{run_matrix, run_matrix_with, CellEvent};
pub use spec::{BenchmarkSpec, CommandTemplate, ModelEntry, Target, TargetKind};
pub use stats::{aggregate, CellId, CellStats, Summary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("rate metrics need at least 2 tokens, got {0}")]
    TooFewTokens(usize),
    #[error("elapsed time between first and last token is zero")]
    ZeroElapsed,
    #[error("no `bench: tokens=.. seconds=.. tok_s=..` line in output")]
    NoMetricsLine,
    #[error("reported tok_s {reported} disagrees with recomputed {recomputed} by more than 1%")]
    InconsistentMetrics { reported: f64, recomputed: f64 },
    #[error("no samples to aggregate")]
    EmptySamples,
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("target {target} failed: {reason}")]
    TargetFailed { target: String, reason: String },
    #[error("model {path}: {source}")]
    ModelLoad {
        path: PathBuf,
        #[source]
        source: crate::model_io::ModelError,
    },
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A cell that produced no statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    #[serde(flatten)]
    pub id: CellId,
    pub reason: String,
}

/// Full output of one benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: BenchmarkSpec,
    pub environment: EnvironmentRecord,
    pub cells: Vec<CellStats>,
    pub failures: Vec<FailedCell>,
}

impl BenchReport {
    /// Distinct model labels in first-seen order.
    pub fn models(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.id.model.as_str()) {
                out.push(&c.id.model);
            }
        }
        out
    }
}
