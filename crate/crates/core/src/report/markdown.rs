use std::fmt::Write;

use super::{format_sig, Metric, ReportDocument, ReportError, ReportFormat};
use crate::harness::BenchReport;

/// One table per model: rows are targets, columns thread counts, cells the
/// metric mean. The best cell in each row is bold.
pub fn render_markdown(report: &BenchReport, metric: Metric) -> Result<ReportDocument, ReportError> {
    let spec = &report.spec;
    let env = &report.environment;
    let mut out = String::new();
    let _ = writeln!(out, "# {} ({})\n", metric.title(), metric.unit());
    let _ = writeln!(
        out,
        "Host: {} / {}, {}, {} logical cores, {}  ",
        env.os, env.arch, env.cpu, env.logical_cores, env.timestamp
    );
    let sampler = match spec.sampler.mode {
        crate::engine::SamplerMode::Argmax => "argmax".to_string(),
        crate::engine::SamplerMode::Temperature => {
            format!(
                "temperature {} (seed {})",
                spec.sampler.temperature, spec.sampler.seed
            )
        }
    };
    let _ = writeln!(
        out,
        "Sampling: {sampler}; {} steps; {} warmup + {} measured runs per cell\n",
        spec.steps, spec.warmup_runs, spec.measured_runs
    );

    for entry in &spec.models {
        let model = entry.display_name();
        let _ = writeln!(out, "## {model}\n");
        out.push_str("| target |");
        for t in &spec.thread_counts {
            let _ = write!(out, " {t} thread{} |", if *t == 1 { "" } else { "s" });
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(spec.thread_counts.len()));
        out.push('\n');

        for target in &spec.targets {
            let values: Vec<Option<f64>> = spec
                .thread_counts
                .iter()
                .map(|&threads| {
                    report
                        .cells
                        .iter()
                        .find(|c| {
                            c.id.model == model && c.id.target == target.label && c.id.threads == threads
                        })
                        .and_then(|c| metric.summary(c))
                        .map(|s| s.mean)
                })
                .collect();
            let best = values.iter().flatten().copied().reduce(|a, b| {
                if metric.higher_is_better() {
                    a.max(b)
                } else {
                    a.min(b)
                }
            });
            let _ = write!(out, "| {} |", target.label.replace('|', "\\|"));
            for v in values {
                match v {
                    Some(v) if Some(v) == best => {
                        let _ = write!(out, " **{}** |", format_sig(v, 6));
                    }
                    Some(v) => {
                        let _ = write!(out, " {} |", format_sig(v, 6));
                    }
                    None => out.push_str(" n/a |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if !report.failures.is_empty() {
        out.push_str("## Failed cells\n\n");
        for f in &report.failures {
            let _ = writeln!(
                out,
                "- {} / {} / {} threads: {}",
                f.id.target, f.id.model, f.id.threads, f.reason
            );
        }
    }
    Ok(ReportDocument {
        format: ReportFormat::Markdown,
        payload: out.into_bytes(),
    })
}
