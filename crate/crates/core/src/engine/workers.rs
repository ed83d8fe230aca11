//! Fixed-size worker pool for the row-parallel matrix-vector products.
//!
//! Rows are split into one contiguous block per worker, and each row is a
//! sequential left-to-right dot product. Output is therefore bit-identical
//! for every thread count.

use rayon::{ThreadPool, ThreadPoolBuilder};

use super::EngineError;

pub struct Workers {
    threads: usize,
    pool: Option<ThreadPool>,
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers").field("threads", &self.threads).finish()
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

impl Workers {
    /// A pool of `threads` workers. One thread runs inline with no pool.
    pub fn new(threads: usize) -> Result<Self, EngineError> {
        if threads == 0 {
            return Err(EngineError::InvalidThreads);
        }
        let pool = if threads > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("llamabench-worker-{i}"))
                    .build()
                    .map_err(|e| EngineError::ThreadPool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Workers { threads, pool })
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// `out = W x` for a row-major `W` of shape `[out.len(), x.len()]`.
    pub fn matmul(&self, out: &mut [f32], w: &[f32], x: &[f32]) -> Result<(), EngineError> {
        let (d, n) = (out.len(), x.len());
        if w.len() != d * n {
            return Err(EngineError::ShapeMismatch(format!(
                "matrix has {} elements, expected {d}x{n}",
                w.len()
            )));
        }
        if n == 0 {
            out.fill(0.0);
            return Ok(());
        }
        let block = |rows: &mut [f32], first_row: usize| {
            for (r, o) in rows.iter_mut().enumerate() {
                let row = first_row + r;
                *o = dot(&w[row * n..(row + 1) * n], x);
            }
        };
        match &self.pool {
            Some(pool) if d > 1 => {
                let per = d.div_ceil(self.threads);
                pool.scope(|s| {
                    for (i, rows) in out.chunks_mut(per).enumerate() {
                        s.spawn(move |_| block(rows, i * per));
                    }
                });
            }
            _ => block(out, 0),
        }
        Ok(())
    }

    /// Runs `f` over every job, with jobs split into contiguous blocks per worker.
    pub fn run<J: Send>(&self, jobs: &mut [J], f: impl Fn(&mut J) + Sync) {
        match &self.pool {
            Some(pool) if jobs.len() > 1 => {
                let per = jobs.len().div_ceil(self.threads);
                let f = &f;
                pool.scope(|s| {
                    for chunk in jobs.chunks_mut(per) {
                        s.spawn(move |_| chunk.iter_mut().for_each(f));
                    }
                });
            }
            _ => jobs.iter_mut().for_each(f),
        }
    }
}
