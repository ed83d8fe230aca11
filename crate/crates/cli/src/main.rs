use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use llamabench::harness::{format_metrics_line, run_matrix_with, CellEvent};
use llamabench::model_io::{inspect, load_tokenizer};
use llamabench::report::{format_sig, from_json, render};
use llamabench::{
    generate, load_model, BenchmarkSpec, GenerateOptions, HarnessError, Metric, MonotonicClock, ReportFormat,
    SamplerSpec, Tokenizer, Transformer,
};

#[derive(Parser)]
#[command(
    name = "llamabench",
    version,
    about = "Llama 2 inference engine and benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate text, streaming tokens to stdout and the metrics line to stderr.
    Generate(GenerateArgs),
    /// Run a benchmark matrix described by a TOML file.
    Bench(BenchArgs),
    /// Render a JSON report as markdown, SVG, CSV or JSON.
    Report(ReportArgs),
    /// Print a model file's config and tensor table.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tokenizer: PathBuf,
    #[arg(long, default_value = "")]
    prompt: String,
    /// Sequence length including the prompt; clamped to the model's context.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// 0 selects greedy argmax decoding.
    #[arg(long, default_value_t = 0.0)]
    temperature: f32,
    /// RNG seed for temperature sampling; defaults to the current time.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long, default_value_t = 1)]
    bos_id: u32,
    #[arg(long, default_value_t = 2)]
    eos_id: u32,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report destination; `-` writes to stdout.
    #[arg(long, short)]
    output: PathBuf,
    /// Defaults to the output file's extension, else json.
    #[arg(long)]
    format: Option<ReportFormat>,
    #[arg(long, default_value = "tok_per_s")]
    metric: Metric,
    /// Overrides `warmup_runs` from the config.
    #[arg(long)]
    warmup: Option<usize>,
    /// Overrides `measured_runs` from the config.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Defaults to the output file's extension, else markdown.
    #[arg(long)]
    format: Option<ReportFormat>,
    #[arg(long, default_value = "tok_per_s")]
    metric: Metric,
    /// Model to chart (SVG only); defaults to the first one.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, short, default_value = "-")]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Report(args) => cmd_report(args),
        Command::Inspect { path } => cmd_inspect(&path),
    };
    match result {
        Ok(code) => code,
        // a closed pipe (`| head`) is not worth a diagnostic
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let file = load_tokenizer(&args.tokenizer, model.config.vocab_size)?;
    let tokenizer = Tokenizer::new(file)?.with_special_ids(args.bos_id, args.eos_id);
    let transformer = Transformer::new(&model, args.threads as usize)?;

    let mut steps = args.steps as usize;
    if steps > model.config.seq_len {
        eprintln!(
            "note: steps clamped to the model's context of {}",
            model.config.seq_len
        );
        steps = model.config.seq_len;
    }
    let sampler = if args.temperature > 0.0 {
        let seed = args.seed.unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)
        });
        SamplerSpec::temperature(args.temperature, seed)
    } else {
        SamplerSpec::argmax()
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut write_err = None;
    let result = generate(
        &transformer,
        &tokenizer,
        &args.prompt,
        &GenerateOptions { steps, sampler },
        &MonotonicClock::new(),
        |prev, next| {
            if write_err.is_some() {
                return;
            }
            let piece = tokenizer.decode(prev, next).unwrap_or(b"");
            if let Err(e) = out.write_all(piece).and_then(|_| out.flush()) {
                write_err = Some(e);
            }
        },
    )?;
    if let Some(e) = write_err {
        return Err(e).context("writing to stdout");
    }
    writeln!(out)?;
    eprintln!(
        "{}",
        format_metrics_line(result.tokens_emitted, result.elapsed().as_secs_f64())
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let mut spec = match BenchmarkSpec::from_file(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    if let Some(w) = args.warmup {
        spec.warmup_runs = w;
    }
    if let Some(r) = args.runs {
        spec.measured_runs = r;
    }
    let format = args
        .format
        .unwrap_or_else(|| format_for(&args.output, ReportFormat::Json));

    let report = match run_matrix_with(&spec, &MonotonicClock::new(), |event| match event {
        CellEvent::Started(_) => {}
        CellEvent::Finished(cell) => eprintln!(
            "ok      {} / {} / {} threads: {} tok/s (sd {}), {} ms/token",
            cell.id.target,
            cell.id.model,
            cell.id.threads,
            format_sig(cell.tok_per_s.mean, 4),
            format_sig(cell.tok_per_s.stddev, 2),
            format_sig(cell.time_per_inference_ms.mean, 4),
        ),
        CellEvent::Failed(f) => {
            eprintln!(
                "failed  {} / {} / {} threads: {}",
                f.id.target, f.id.model, f.id.threads, f.reason
            )
        }
    }) {
        Ok(r) => r,
        Err(e @ HarnessError::InvalidSpec(_)) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };

    let doc = render(&report, format, args.metric, None)?;
    write_output(&args.output, &doc.payload)?;
    if report.cells.is_empty() {
        bail!("all {} cells failed", report.failures.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let bytes = std::fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let report = from_json(&bytes).with_context(|| format!("parsing {}", args.input.display()))?;
    let format = args
        .format
        .unwrap_or_else(|| format_for(&args.output, ReportFormat::Markdown));
    let doc = render(&report, format, args.metric, args.model.as_deref())?;
    write_output(&args.output, &doc.payload)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect(path: &Path) -> Result<ExitCode> {
    let summary = inspect(path)?;
    write!(io::stdout().lock(), "{summary}")?;
    Ok(ExitCode::SUCCESS)
}

fn format_for(output: &Path, fallback: ReportFormat) -> ReportFormat {
    output
        .extension()
        .and_then(|e| ReportFormat::from_extension(&e.to_string_lossy()))
        .unwrap_or(fallback)
}

fn write_output(path: &Path, payload: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        let mut out = io::stdout().lock();
        out.write_all(payload)?;
        out.flush()?;
    } else {
        std::fs::write(path, payload).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
