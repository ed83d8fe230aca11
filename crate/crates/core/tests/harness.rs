use std::path::Path;
use std::time::Duration;

use llamabench::fixtures::{ascii_tokenizer, random_model, tiny_config, zero_model};
use llamabench::harness::{run_matrix_with, CellEvent};
use llamabench::model_io::{write_checkpoint, write_tokenizer};
use llamabench::{run_matrix, BenchmarkSpec, FakeClock, HarnessError, Model};
use tempfile::TempDir;

fn write_fixture(dir: &Path, model: &Model) {
    write_checkpoint(model, dir.join("tiny.bin")).unwrap();
    write_tokenizer(&ascii_tokenizer(), dir.join("tok.bin")).unwrap();
}

fn spec(dir: &Path, body: &str) -> BenchmarkSpec {
    let path = dir.join("bench.toml");
    let text = format!("{body}\n[[models]]\npath = \"tiny.bin\"\ntokenizer = \"tok.bin\"\n");
    std::fs::write(&path, text).unwrap();
    BenchmarkSpec::from_file(&path).unwrap()
}

#[test]
fn internal_matrix_has_every_cell() {
    let dir = TempDir::new().unwrap();
    write_fixture(dir.path(), &zero_model(tiny_config(32)));
    let spec = spec(
        dir.path(),
        "thread_counts = [1, 2]\nwarmup_runs = 1\nmeasured_runs = 3\nsteps = 16\n\
         [[targets]]\nlabel = \"llamabench\"\nkind = \"internal\"\n",
    );
    let mut started = 0;
    let report = run_matrix_with(
        &spec,
        &FakeClock::new(Duration::ZERO, Duration::from_millis(10)),
        |e| {
            if let CellEvent::Started(_) = e {
                started += 1
            }
        },
    )
    .unwrap();
    assert_eq!(started, 2);
    assert!(report.failures.is_empty());
    assert_eq!(report.cells.len(), 2);
    for (cell, threads) in report.cells.iter().zip([1, 2]) {
        assert_eq!(cell.id.threads, threads);
        assert_eq!(cell.id.model, "tiny.bin");
        assert_eq!(cell.samples.len(), 3);
        for s in &cell.samples {
            // zero logits always pick <unk>, never EOS: 15 sampled tokens
            assert_eq!(s.tokens_emitted, 15);
            assert!((s.elapsed_s - 0.14).abs() < 1e-12);
            assert!((s.tok_per_s - 100.0).abs() < 1e-9);
            assert!((s.time_per_inference_ms - 10.0).abs() < 1e-9);
        }
        assert_eq!(cell.tok_per_s.stddev, 0.0);
    }
}

#[test]
fn internal_peak_covers_weights() {
    let dir = TempDir::new().unwrap();
    let model = random_model(tiny_config(32), 3, 0.5);
    write_fixture(dir.path(), &model);
    let spec = spec(
        dir.path(),
        "thread_counts = [1]\nwarmup_runs = 0\nmeasured_runs = 1\nsteps = 8\n\
         [[targets]]\nlabel = \"i\"\nkind = \"internal\"\n",
    );
    let report = run_matrix(&spec).unwrap();
    let cell = &report.cells[0];
    if cfg!(any(target_os = "linux", target_os = "macos")) {
        let peak = cell.peak_memory_bytes.as_ref().expect("measured").min;
        assert!(peak >= model.weight_bytes() as f64);
    }
}

#[test]
fn external_failures_do_not_stop_the_matrix() {
    let dir = TempDir::new().unwrap();
    write_fixture(dir.path(), &zero_model(tiny_config(32)));
    let spec = spec(
        dir.path(),
        r#"thread_counts = [1, 2]
warmup_runs = 1
measured_runs = 2
steps = 8

[[targets]]
label = "good"
kind = "external"
command = ["sh", "-c", "echo 'bench: tokens=11 seconds=0.5 tok_s=20'; echo 'bench: tokens={steps} seconds=1 tok_s=7' >&2"]

[[targets]]
label = "garbled"
kind = "external"
command = ["sh", "-c", "echo 'bench: tokens=eleven seconds=0.5'"]

[[targets]]
label = "crashes"
kind = "external"
command = "sh -c exit"

[[targets]]
label = "absent"
kind = "external"
command = "/nonexistent/llama-run {model}"
"#,
    );
    let report = run_matrix(&spec).unwrap();
    assert_eq!(report.cells.len(), 2);
    for cell in &report.cells {
        assert_eq!(cell.id.target, "good");
        // stderr line wins, with {steps} substituted
        assert!(cell
            .samples
            .iter()
            .all(|s| s.tokens_emitted == 8 && s.tok_per_s == 7.0));
    }
    let failed: Vec<(&str, usize)> = report
        .failures
        .iter()
        .map(|f| (f.id.target.as_str(), f.id.threads))
        .collect();
    assert_eq!(
        failed,
        [
            ("garbled", 1),
            ("garbled", 2),
            ("crashes", 1),
            ("crashes", 2),
            ("absent", 1),
            ("absent", 2)
        ]
    );
    assert!(
        report.failures[0].reason.contains("no `bench: tokens="),
        "{}",
        report.failures[0].reason
    );
}

#[test]
fn missing_model_aborts() {
    let dir = TempDir::new().unwrap();
    let spec = spec(
        dir.path(),
        "thread_counts = [1]\n[[targets]]\nlabel = \"i\"\nkind = \"internal\"\n",
    );
    match run_matrix(&spec) {
        Err(HarnessError::ModelLoad { path, .. }) => assert!(path.ends_with("tiny.bin")),
        other => panic!("expected ModelLoad, got {other:?}"),
    }
}

#[test]
fn report_json_round_trips() {
    let dir = TempDir::new().unwrap();
    write_fixture(dir.path(), &zero_model(tiny_config(32)));
    let spec = spec(
        dir.path(),
        "thread_counts = [1]\nmeasured_runs = 2\nsteps = 6\n[[targets]]\nlabel = \"i\"\nkind = \"internal\"\n",
    );
    let report = run_matrix_with(
        &spec,
        &FakeClock::new(Duration::ZERO, Duration::from_millis(5)),
        |_| {},
    )
    .unwrap();
    let json = llamabench::report::to_json(&report).unwrap();
    let back = llamabench::report::from_json(&json.payload).unwrap();
    assert_eq!(back, report);
}

#[test]
fn documented_config_parses() {
    let spec = BenchmarkSpec::from_toml_str(
        r#"
thread_counts = [1, 4]
warmup_runs = 1
measured_runs = 5
steps = 256
prompt = ""
sampler = { mode = "temperature", temperature = 0.8, seed = 42 }

[[models]]
path = "models/stories15M.bin"
tokenizer = "models/tokenizer.bin"
label = "stories15M"

[[targets]]
label = "llamabench"
kind = "internal"

[[targets]]
label = "llama2.c"
kind = "external"
command = ["./run", "{model}", "-z", "{tokenizer}", "-n", "{steps}", "-i", "{prompt}"]
"#,
    )
    .unwrap();
    assert_eq!(spec.sampler, llamabench::SamplerSpec::temperature(0.8, 42));
    assert_eq!(spec.models[0].display_name(), "stories15M");
    let argmax = BenchmarkSpec::from_toml_str(
        "thread_counts = [1]\nsampler = { mode = \"argmax\" }\n\
         [[models]]\npath = \"m.bin\"\n[[targets]]\nlabel = \"x\"\nkind = \"internal\"\n",
    )
    .unwrap();
    assert_eq!(argmax.sampler, llamabench::SamplerSpec::argmax());
    assert!(BenchmarkSpec::from_toml_str("thread_counts = [1]\nbogus = 1\n").is_err());
    let no_temp = "thread_counts = [1]\nsampler = { mode = \"temperature\" }\n\
                   [[models]]\npath = \"m.bin\"\n[[targets]]\nlabel = \"x\"\nkind = \"internal\"\n";
    assert!(matches!(
        BenchmarkSpec::from_toml_str(no_temp),
        Err(HarnessError::InvalidSpec(_))
    ));
}
