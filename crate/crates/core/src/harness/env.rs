use serde::{Deserialize, Serialize};

/// Host description stored with every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    pub os: String,
    pub arch: String,
    pub cpu: String,
    pub logical_cores: usize,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl EnvironmentRecord {
    pub fn capture() -> Self {
        EnvironmentRecord {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpu: cpu_description().unwrap_or_else(|| "unknown".to_string()),
            logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

#[cfg(target_os = "linux")]
fn cpu_description() -> Option<String> {
    let info = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .find(|l| l.starts_with("model name") || l.starts_with("Model") || l.starts_with("cpu model"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

#[cfg(target_os = "macos")]
fn cpu_description() -> Option<String> {
    let out = std::process::Command::new("sysctl")
        .args(["-n", "machdep.cpu.brand_string"])
        .output()
        .ok()?;
    Some(String::from_utf8_lossy(&out.stdout).trim().to_string()).filter(|s| !s.is_empty())
}

#[cfg(not(any(target_os = "linux", target_os = "macos")))]
fn cpu_description() -> Option<String> {
    None
}
