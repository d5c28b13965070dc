//! Chunked fan-out with a fixed reduction order.
//!
//! Work over `0..len` is cut into fixed-size chunks. Each chunk is reduced
//! sequentially and the per-chunk results are combined in chunk order, so the
//! floating-point result does not depend on the thread count or on whether the
//! `parallel` feature is compiled in.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Rows per chunk for batch gradients and scoring.
pub const ROW_CHUNK: usize = 64;
/// Grid points per chunk for penalty and certification scans.
pub const GRID_CHUNK: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

fn chunk_range(c: usize, chunk: usize, len: usize) -> Range<usize> {
    let start = c * chunk;
    start..(start + chunk).min(len)
}

/// Applies `f` to every chunk of `0..len` and returns the results in chunk order.
pub fn map_chunks<R, F>(exec: Execution, len: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    assert!(chunk > 0);
    let chunks = len.div_ceil(chunk);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel if chunks > 1 => {
            use rayon::prelude::*;
            (0..chunks)
                .into_par_iter()
                .map(|c| f(chunk_range(c, chunk, len)))
                .collect()
        }
        _ => (0..chunks).map(|c| f(chunk_range(c, chunk, len))).collect(),
    }
}

/// Ordered sum of per-chunk scalar results.
pub fn sum_chunks<F>(exec: Execution, len: usize, chunk: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    map_chunks(exec, len, chunk, f).into_iter().sum()
}

/// Ordered sum of per-chunk vectors of length `dim`.
pub fn sum_vec_chunks<F>(exec: Execution, len: usize, chunk: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    let parts = map_chunks(exec, len, chunk, |range| {
        let mut acc = vec![0.0; dim];
        f(range, &mut acc);
        acc
    });
    let mut total = vec![0.0; dim];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}
