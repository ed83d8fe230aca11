use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::{SamplerMode, SamplerSpec};

/// What a benchmark target runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetKind {
    /// This crate's engine, called in-process.
    Internal,
    /// Any program that prints a metrics line.
    External { command: CommandTemplate },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub label: String,
    #[serde(flatten)]
    pub kind: TargetKind,
}

/// Argument vector with `{model}`, `{tokenizer}`, `{threads}`, `{steps}` and
/// `{prompt}` placeholders. Written either as an array of arguments or as a
/// single whitespace-separated string; substitution happens inside each
/// argument, so a prompt containing spaces stays one argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawTemplate", into = "Vec<String>")]
pub struct CommandTemplate(pub Vec<String>);

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTemplate {
    Line(String),
    Args(Vec<String>),
}

impl From<RawTemplate> for CommandTemplate {
    fn from(raw: RawTemplate) -> Self {
        match raw {
            RawTemplate::Line(s) => CommandTemplate(s.split_whitespace().map(String::from).collect()),
            RawTemplate::Args(a) => CommandTemplate(a),
        }
    }
}

impl From<CommandTemplate> for Vec<String> {
    fn from(t: CommandTemplate) -> Self {
        t.0
    }
}

pub struct Substitutions<'a> {
    pub model: &'a str,
    pub tokenizer: &'a str,
    pub threads: usize,
    pub steps: usize,
    pub prompt: &'a str,
}

impl CommandTemplate {
    pub fn render(&self, s: &Substitutions<'_>) -> Vec<String> {
        let threads = s.threads.to_string();
        let steps = s.steps.to_string();
        self.0
            .iter()
            .map(|arg| {
                arg.replace("{model}", s.model)
                    .replace("{tokenizer}", s.tokenizer)
                    .replace("{threads}", &threads)
                    .replace("{steps}", &steps)
                    .replace("{prompt}", s.prompt)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub path: PathBuf,
    /// Needed by internal targets; passed to external ones as `{tokenizer}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer: Option<PathBuf>,
    /// Display name; defaults to the file name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ModelEntry {
    pub fn display_name(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            self.path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.path.display().to_string())
        })
    }
}

fn default_warmup() -> usize {
    1
}

fn default_runs() -> usize {
    5
}

fn default_steps() -> usize {
    256
}

/// A benchmark matrix declaration, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub targets: Vec<Target>,
    pub models: Vec<ModelEntry>,
    pub thread_counts: Vec<usize>,
    #[serde(default = "default_warmup")]
    pub warmup_runs: usize,
    #[serde(default = "default_runs")]
    pub measured_runs: usize,
    /// Sequence length per run, prompt included.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub prompt: String,
    #[serde(default)]
    pub sampler: SamplerSpec,
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.targets.is_empty() {
            return fail("at least one target is required");
        }
        if self.models.is_empty() {
            return fail("at least one model is required");
        }
        if self.thread_counts.is_empty() {
            return fail("thread_counts must not be empty");
        }
        if self.thread_counts.contains(&0) {
            return fail("thread counts must be at least 1");
        }
        if self.measured_runs == 0 {
            return fail("measured_runs must be at least 1");
        }
        if self.steps == 0 {
            return fail("steps must be at least 1");
        }
        if self.sampler.mode == SamplerMode::Temperature
            && !(self.sampler.temperature > 0.0 && self.sampler.temperature.is_finite())
        {
            return fail("temperature sampling needs a positive temperature");
        }
        let mut labels: Vec<&str> = self.targets.iter().map(|t| t.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return fail("target labels must be unique");
        }
        for t in &self.targets {
            if let TargetKind::External { command } = &t.kind {
                if command.0.is_empty() {
                    return fail(&format!("target {}: empty command", t.label));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: BenchmarkSpec =
            toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a TOML config. Relative model and tokenizer paths resolve
    /// against the config file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let config_err = |message: String| HarnessError::Config {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
        let mut spec = Self::from_toml_str(&text).map_err(|e| config_err(e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for m in &mut spec.models {
            if m.path.is_relative() {
                m.path = base.join(&m.path);
            }
            if let Some(t) = &mut m.tokenizer {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(spec)
    }
}
