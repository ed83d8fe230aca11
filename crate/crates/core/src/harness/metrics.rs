use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::GenerationResult;

/// Measurements from a single benchmark run.
///
/// `tok_per_s = (tokens_emitted - 1) / elapsed_s` and
/// `time_per_inference_ms = 1000 * elapsed_s / (tokens_emitted - 1)`, where
/// `elapsed_s` spans first to last emitted token. Prompt processing and the
/// first token's latency are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub tokens_emitted: usize,
    pub elapsed_s: f64,
    pub tok_per_s: f64,
    pub time_per_inference_ms: f64,
    /// `None` when the platform could not measure it.
    pub peak_memory_bytes: Option<u64>,
}

impl RunMetrics {
    pub fn from_counts(
        tokens_emitted: usize,
        elapsed_s: f64,
        peak_memory_bytes: Option<u64>,
    ) -> Result<Self, HarnessError> {
        if tokens_emitted < 2 {
            return Err(HarnessError::TooFewTokens(tokens_emitted));
        }
        if elapsed_s <= 0.0 || !elapsed_s.is_finite() {
            return Err(HarnessError::ZeroElapsed);
        }
        let steps = (tokens_emitted - 1) as f64;
        Ok(RunMetrics {
            tokens_emitted,
            elapsed_s,
            tok_per_s: steps / elapsed_s,
            time_per_inference_ms: 1000.0 * elapsed_s / steps,
            peak_memory_bytes,
        })
    }
}

pub fn compute_metrics(
    result: &GenerationResult,
    peak_memory_bytes: Option<u64>,
) -> Result<RunMetrics, HarnessError> {
    RunMetrics::from_counts(
        result.tokens_emitted,
        result.elapsed().as_secs_f64(),
        peak_memory_bytes,
    )
}

/// The wire line external implementations print: `bench: tokens=N seconds=S tok_s=R`.
pub fn format_metrics_line(tokens: usize, seconds: f64) -> String {
    let tok_s = if tokens >= 2 && seconds > 0.0 {
        (tokens - 1) as f64 / seconds
    } else {
        0.0
    };
    format!("bench: tokens={tokens} seconds={seconds} tok_s={tok_s}")
}

fn parse_line(line: &str) -> Option<(usize, f64, f64)> {
    let rest = line.trim_end_matches(['\r', '\n']).strip_prefix("bench: ")?;
    let mut parts = rest.split(' ');
    let tokens = parts.next()?.strip_prefix("tokens=")?.parse().ok()?;
    let seconds = parts.next()?.strip_prefix("seconds=")?.parse().ok()?;
    let tok_s = parts.next()?.strip_prefix("tok_s=")?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((tokens, seconds, tok_s))
}

/// Finds the last well-formed metrics line in `output` and cross-checks the
/// printed rate against `(tokens - 1) / seconds` to within 1%.
pub fn parse_metrics_line(output: &str) -> Result<RunMetrics, HarnessError> {
    let (tokens, seconds, reported) = output
        .lines()
        .rev()
        .find_map(parse_line)
        .ok_or(HarnessError::NoMetricsLine)?;
    let metrics = RunMetrics::from_counts(tokens, seconds, None)?;
    let recomputed = metrics.tok_per_s;
    if (reported - recomputed).abs() > 0.01 * recomputed {
        return Err(HarnessError::InconsistentMetrics { reported, recomputed });
    }
    Ok(metrics)
}
