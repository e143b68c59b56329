//! Ordered parallel map over run indices.
//!
//! Results always come back in index order, so aggregates do not depend on
//! how many workers ran them.

use crate::error::{config, Result};

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Runs `op` on a pool of `workers` threads (`None` = global pool).
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(op()),
        Some(0) => config("workers must be at least 1"),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T>(workers: Option<usize>, op: impl FnOnce() -> T) -> Result<T> {
    if workers == Some(0) {
        return config("workers must be at least 1");
    }
    Ok(op())
}
