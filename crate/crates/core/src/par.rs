// SPDX-License-Identifier: Apache-2.0

//! Replicate fan-out: rayon when the `parallel` feature is on, a plain loop
//! otherwise. Output order is the replicate order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f(0), …, f(count − 1)`, collected in order.
pub fn map_replicates<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicates_sequential(count, f)
    }
}

/// Always sequential; kept public so the two strategies can be benchmarked
/// against each other in one build.
pub fn map_replicates_sequential<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

/// Runs `f` on a pool of at most `threads` workers. Without the `parallel`
/// feature everything is sequential and this just calls `f`.
pub fn with_threads<T, F>(threads: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
