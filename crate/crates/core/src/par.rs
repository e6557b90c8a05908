//! Index-addressed parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work runs on rayon; without it every
//! execution mode runs sequentially. Results are always returned in index
//! order, so callers see the same output either way.

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `threads == 0` uses the global pool.
    Parallel { threads: usize },
}

impl Execution {
    /// `Some(1)` and builds without the `parallel` feature map to sequential.
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Parallel { threads: n },
            None => Execution::Parallel { threads: 0 },
        }
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok((0..n).map(f).collect()),
        Execution::Parallel { threads } => parallel(n, threads, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    if threads == 0 {
        return Ok((0..n).into_par_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(n: usize, _threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    Ok((0..n).map(f).collect())
}
