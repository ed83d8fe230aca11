use std::process::Command;

use super::memory::{reset_self_peak_rss, run_and_measure, self_peak_rss};
use super::spec::Substitutions;
use super::{
    aggregate, compute_metrics, parse_metrics_line, BenchReport, BenchmarkSpec, CellId, CellStats,
    EnvironmentRecord, FailedCell, HarnessError, ModelEntry, RunMetrics, TargetKind,
};
use crate::clock::{Clock, MonotonicClock};
use crate::engine::{generate, GenerateOptions, Transformer};
use crate::model_io::{load_model, load_tokenizer, Model};
use crate::tokenizer::Tokenizer;

/// Progress notifications from [`run_matrix_with`].
#[derive(Debug)]
pub enum CellEvent<'a> {
    Started(&'a CellId),
    Finished(&'a CellStats),
    Failed(&'a FailedCell),
}

pub fn run_matrix(spec: &BenchmarkSpec) -> Result<BenchReport, HarnessError> {
    run_matrix_with(spec, &MonotonicClock::new(), |_| {})
}

/// Runs every cell in (model, target, threads) order, one run at a time.
///
/// A failing target marks its cell failed and the matrix continues. Missing
/// model files, or models the internal engine cannot load, abort the run.
pub fn run_matrix_with(
    spec: &BenchmarkSpec,
    clock: &dyn Clock,
    mut observe: impl FnMut(CellEvent<'_>),
) -> Result<BenchReport, HarnessError> {
    spec.validate()?;
    for m in &spec.models {
        if let Err(e) = std::fs::metadata(&m.path) {
            return Err(HarnessError::ModelLoad {
                path: m.path.clone(),
                source: crate::model_io::ModelError::Io {
                    path: m.path.clone(),
                    source: e,
                },
            });
        }
    }
    let environment = EnvironmentRecord::capture();
    let needs_engine = spec.targets.iter().any(|t| t.kind == TargetKind::Internal);
    let mut cells = Vec::new();
    let mut failures = Vec::new();

    for entry in &spec.models {
        let loaded = if needs_engine {
            Some(load_internal(entry)?)
        } else {
            None
        };
        for target in &spec.targets {
            for &threads in &spec.thread_counts {
                let id = CellId {
                    target: target.label.clone(),
                    model: entry.display_name(),
                    threads,
                };
                observe(CellEvent::Started(&id));
                let outcome = match &target.kind {
                    TargetKind::Internal => {
                        let (model, tokenizer) = loaded.as_ref().expect("loaded for internal targets");
                        run_internal_cell(spec, model, tokenizer, threads, clock)
                    }
                    TargetKind::External { command } => {
                        let subs = Substitutions {
                            model: &entry.path.to_string_lossy(),
                            tokenizer: &entry
                                .tokenizer
                                .as_ref()
                                .map(|t| t.to_string_lossy().into_owned())
                                .unwrap_or_default(),
                            threads,
                            steps: spec.steps,
                            prompt: &spec.prompt,
                        };
                        run_external_cell(spec, &command.render(&subs))
                    }
                };
                match outcome.and_then(|samples| aggregate(id.clone(), samples)) {
                    Ok(stats) => {
                        observe(CellEvent::Finished(&stats));
                        cells.push(stats);
                    }
                    Err(e) => {
                        let failed = FailedCell {
                            id,
                            reason: e.to_string(),
                        };
                        observe(CellEvent::Failed(&failed));
                        failures.push(failed);
                    }
                }
            }
        }
    }
    Ok(BenchReport {
        spec: spec.clone(),
        environment,
        cells,
        failures,
    })
}

fn load_internal(entry: &ModelEntry) -> Result<(Model, Tokenizer), HarnessError> {
    let model = load_model(&entry.path).map_err(|source| HarnessError::ModelLoad {
        path: entry.path.clone(),
        source,
    })?;
    let tok_path = entry.tokenizer.as_ref().ok_or_else(|| {
        HarnessError::InvalidSpec(format!(
            "model {} needs a tokenizer for internal targets",
            entry.path.display()
        ))
    })?;
    let file =
        load_tokenizer(tok_path, model.config.vocab_size).map_err(|source| HarnessError::ModelLoad {
            path: tok_path.clone(),
            source,
        })?;
    let tokenizer = Tokenizer::new(file).map_err(crate::engine::EngineError::from)?;
    Ok((model, tokenizer))
}

fn run_internal_cell(
    spec: &BenchmarkSpec,
    model: &Model,
    tokenizer: &Tokenizer,
    threads: usize,
    clock: &dyn Clock,
) -> Result<Vec<RunMetrics>, HarnessError> {
    let transformer = Transformer::new(model, threads)?;
    let options = GenerateOptions {
        steps: spec.steps,
        sampler: spec.sampler,
    };
    let mut samples = Vec::with_capacity(spec.measured_runs);
    for run in 0..spec.warmup_runs + spec.measured_runs {
        reset_self_peak_rss();
        let result = generate(&transformer, tokenizer, &spec.prompt, &options, clock, |_, _| {})?;
        let metrics = compute_metrics(&result, self_peak_rss())?;
        if run >= spec.warmup_runs {
            samples.push(metrics);
        }
    }
    Ok(samples)
}

fn run_external_cell(spec: &BenchmarkSpec, argv: &[String]) -> Result<Vec<RunMetrics>, HarnessError> {
    let mut samples = Vec::with_capacity(spec.measured_runs);
    let fail = |reason: String| HarnessError::TargetFailed {
        target: argv[0].clone(),
        reason,
    };
    for run in 0..spec.warmup_runs + spec.measured_runs {
        let outcome = run_and_measure(Command::new(&argv[0]).args(&argv[1..]))
            .map_err(|e| fail(format!("cannot run {}: {e}", argv[0])))?;
        if !outcome.status.success() {
            let tail = String::from_utf8_lossy(&outcome.stderr);
            let tail = tail.lines().last().unwrap_or("").trim().to_string();
            return Err(fail(format!("exited with {}: {tail}", outcome.status)));
        }
        // stdout first, so a metrics line on stderr wins over one on stdout
        let mut text = String::from_utf8_lossy(&outcome.stdout).into_owned();
        text.push('\n');
        text.push_str(&String::from_utf8_lossy(&outcome.stderr));
        let mut metrics = parse_metrics_line(&text).map_err(|e| fail(e.to_string()))?;
        metrics.peak_memory_bytes = outcome.peak_memory_bytes;
        if run >= spec.warmup_runs {
            samples.push(metrics);
        }
    }
    Ok(samples)
}
