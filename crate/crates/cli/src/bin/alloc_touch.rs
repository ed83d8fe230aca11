//! Test fixture: allocates and touches N MiB (default 64), holds it briefly,
//! then prints a metrics line so it can stand in as an external target.

use std::hint::black_box;
use std::time::Duration;

fn main() {
    let mib: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let mut buf = vec![0u8; mib << 20];
    for i in (0..buf.len()).step_by(4096) {
        buf[i] = (i >> 12) as u8 | 1;
    }
    black_box(&buf);
    std::thread::sleep(Duration::from_millis(100));
    let sum: u64 = buf.iter().step_by(4096).map(|&b| b as u64).sum();
    black_box(sum);
    eprintln!("bench: tokens=2 seconds=0.1 tok_s=10");
}
