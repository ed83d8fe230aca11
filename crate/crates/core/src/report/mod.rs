//! Renderers for [`BenchReport`]s. All output is a pure function of the
//! report, so identical reports render to identical bytes.

mod csv_out;
mod markdown;
mod numfmt;
mod svg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{BenchReport, CellStats, Summary};

pub use csv_out::to_csv;
pub use markdown::render_markdown;
pub use numfmt::format_sig;
pub use svg::{bar_heights, render_svg_bars};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown metric {0:?} (expected tok_per_s, time_per_inference_ms or peak_memory_bytes)")]
    UnknownMetric(String),
    #[error("unknown report format {0:?} (expected csv, json, markdown or svg)")]
    UnknownFormat(String),
    #[error("model {0:?} is not in the report")]
    ModelNotInReport(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TokPerS,
    TimePerInferenceMs,
    PeakMemoryBytes,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::TokPerS,
        Metric::TimePerInferenceMs,
        Metric::PeakMemoryBytes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TokPerS => "tok_per_s",
            Metric::TimePerInferenceMs => "time_per_inference_ms",
            Metric::PeakMemoryBytes => "peak_memory_bytes",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::TokPerS => "tokens/s",
            Metric::TimePerInferenceMs => "ms",
            Metric::PeakMemoryBytes => "bytes",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::TokPerS => "Average tokens per second",
            Metric::TimePerInferenceMs => "Average time per inference",
            Metric::PeakMemoryBytes => "Average peak memory",
        }
    }

    /// Throughput is better high; latency and memory are better low.
    pub fn higher_is_better(self) -> bool {
        self == Metric::TokPerS
    }

    pub fn summary(self, cell: &CellStats) -> Option<&Summary> {
        match self {
            Metric::TokPerS => Some(&cell.tok_per_s),
            Metric::TimePerInferenceMs => Some(&cell.time_per_inference_ms),
            Metric::PeakMemoryBytes => cell.peak_memory_bytes.as_ref(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ReportError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
    Svg,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
            ReportFormat::Svg => "svg",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            "md" | "markdown" => Some(ReportFormat::Markdown),
            "svg" => Some(ReportFormat::Svg),
            _ => None,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportFormat::from_extension(s).ok_or_else(|| ReportError::UnknownFormat(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub format: ReportFormat,
    pub payload: Vec<u8>,
}

impl ReportDocument {
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.payload).expect("renderers emit UTF-8")
    }
}

/// Pretty-printed JSON of the full report. Absent memory metrics are `null`.
pub fn to_json(report: &BenchReport) -> Result<ReportDocument, ReportError> {
    let mut payload = serde_json::to_vec_pretty(report)?;
    payload.push(b'\n');
    Ok(ReportDocument {
        format: ReportFormat::Json,
        payload,
    })
}

pub fn from_json(bytes: &[u8]) -> Result<BenchReport, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Renders `report` in `format`. `metric` applies to markdown and SVG; SVG
/// charts one model, defaulting to the first in the report.
pub fn render(
    report: &BenchReport,
    format: ReportFormat,
    metric: Metric,
    model: Option<&str>,
) -> Result<ReportDocument, ReportError> {
    match format {
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => to_json(report),
        ReportFormat::Markdown => render_markdown(report, metric),
        ReportFormat::Svg => {
            let first = report
                .spec
                .models
                .first()
                .map(|m| m.display_name())
                .unwrap_or_default();
            render_svg_bars(report, metric, model.unwrap_or(&first))
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::engine::SamplerSpec;
    use crate::harness::{
        BenchReport, BenchmarkSpec, CellId, CellStats, EnvironmentRecord, ModelEntry, RunMetrics, Summary,
        Target, TargetKind,
    };

    pub fn summary(mean: f64) -> Summary {
        Summary {
            mean,
            stddev: 0.0,
            min: mean,
            max: mean,
            median: mean,
        }
    }

    pub fn cell(target: &str, model: &str, threads: usize, tps: f64) -> CellStats {
        let m = RunMetrics::from_counts(11, 10.0 / tps, None).unwrap();
        CellStats {
            id: CellId {
                target: target.into(),
                model: model.into(),
                threads,
            },
            samples: vec![m],
            tok_per_s: summary(tps),
            time_per_inference_ms: summary(1000.0 / tps),
            peak_memory_bytes: None,
        }
    }

    pub fn report(
        targets: &[&str],
        models: &[&str],
        threads: &[usize],
        cells: Vec<CellStats>,
    ) -> BenchReport {
        BenchReport {
            spec: BenchmarkSpec {
                targets: targets
                    .iter()
                    .map(|t| Target {
                        label: t.to_string(),
                        kind: TargetKind::Internal,
                    })
                    .collect(),
                models: models
                    .iter()
                    .map(|m| ModelEntry {
                        path: m.into(),
                        tokenizer: None,
                        label: None,
                    })
                    .collect(),
                thread_counts: threads.to_vec(),
                warmup_runs: 1,
                measured_runs: 1,
                steps: 16,
                prompt: String::new(),
                sampler: SamplerSpec::argmax(),
            },
            environment: EnvironmentRecord {
                os: "linux".into(),
                arch: "x86_64".into(),
                cpu: "test cpu".into(),
                logical_cores: 8,
                timestamp: "2026-01-01T00:00:00Z".into(),
            },
            cells,
            failures: vec![],
        }
    }
}
