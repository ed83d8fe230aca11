//! Peak resident-set measurement.
//!
//! Linux: the child's `VmHWM` is sampled from `/proc/<pid>/status` every
//! 5 ms while it runs. `ru_maxrss` from `wait4` is used only when it exceeds
//! the harness's own peak: a spawned child inherits the parent's high-water
//! mark through `exec`, so smaller values can be the parent's rather than
//! the child's. A child that exits before the first sample falls back to
//! `ru_maxrss`, which is then an upper bound.
//!
//! macOS and other Unixes: `ru_maxrss` from `wait4` (bytes on macOS,
//! KiB elsewhere). Other platforms report no measurement.

use std::io::{self, Read};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;

#[cfg(target_os = "linux")]
fn read_status_kib(path: &str, field: &str) -> Option<u64> {
    let status = std::fs::read_to_string(path).ok()?;
    let line = status.lines().find(|l| l.starts_with(field))?;
    let kib: u64 = line[field.len()..]
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kib * 1024)
}

/// Peak RSS of this process so far.
pub fn self_peak_rss() -> Option<u64> {
    #[cfg(target_os = "linux")]
    {
        read_status_kib("/proc/self/status", "VmHWM:")
    }
    #[cfg(all(unix, not(target_os = "linux")))]
    {
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        if unsafe { libc::getrusage(libc::RUSAGE_SELF, &mut usage) } != 0 {
            return None;
        }
        Some(maxrss_bytes(usage.ru_maxrss))
    }
    #[cfg(not(unix))]
    {
        None
    }
}

/// Resets this process's peak RSS to its current RSS. Linux only; returns
/// whether the reset happened.
pub fn reset_self_peak_rss() -> bool {
    #[cfg(target_os = "linux")]
    {
        std::fs::write("/proc/self/clear_refs", "5").is_ok()
    }
    #[cfg(not(target_os = "linux"))]
    {
        false
    }
}

#[cfg(unix)]
fn maxrss_bytes(raw: libc::c_long) -> u64 {
    let raw = raw.max(0) as u64;
    if cfg!(target_os = "macos") {
        raw
    } else {
        raw * 1024
    }
}

/// Waits for `child` and returns its exit status and peak RSS in bytes.
///
/// The child must not have been waited on. Its stdout/stderr, if piped,
/// must be drained by the caller or the child may block.
pub fn measure_peak_memory(child: &mut Child) -> io::Result<(ExitStatus, Option<u64>)> {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        use std::time::Duration;

        let pid = child.id() as libc::pid_t;
        let parent_peak = self_peak_rss().unwrap_or(u64::MAX);
        #[cfg(target_os = "linux")]
        let status_path = format!("/proc/{pid}/status");
        let mut sampled: Option<u64> = None;
        loop {
            let mut status: libc::c_int = 0;
            let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
            let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
            if r == pid {
                let rusage_peak = maxrss_bytes(usage.ru_maxrss);
                let peak = if cfg!(target_os = "linux") {
                    match sampled {
                        _ if rusage_peak > parent_peak => Some(rusage_peak),
                        Some(s) => Some(s),
                        None => Some(rusage_peak),
                    }
                } else {
                    Some(rusage_peak)
                };
                return Ok((ExitStatus::from_raw(status), peak.filter(|&p| p > 0)));
            }
            if r < 0 {
                let err = io::Error::last_os_error();
                if err.kind() == io::ErrorKind::Interrupted {
                    continue;
                }
                return Err(err);
            }
            #[cfg(target_os = "linux")]
            if let Some(hwm) = read_status_kib(&status_path, "VmHWM:") {
                sampled = Some(sampled.map_or(hwm, |s| s.max(hwm)));
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
    #[cfg(not(unix))]
    {
        Ok((child.wait()?, None))
    }
}

#[derive(Debug, Clone)]
pub struct ChildOutcome {
    pub status: ExitStatus,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub peak_memory_bytes: Option<u64>,
}

/// Spawns `cmd` with piped output, drains both streams and measures the
/// child's peak RSS.
pub fn run_and_measure(cmd: &mut Command) -> io::Result<ChildOutcome> {
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            buf
        })
    };
    let out = drain(Box::new(child.stdout.take().expect("piped stdout")));
    let err = drain(Box::new(child.stderr.take().expect("piped stderr")));
    let (status, peak_memory_bytes) = measure_peak_memory(&mut child)?;
    Ok(ChildOutcome {
        status,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        peak_memory_bytes,
    })
}
