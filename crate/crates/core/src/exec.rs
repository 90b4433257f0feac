//! Data-parallel execution with a sequential fallback.
//!
//! With the default `parallel` feature the closures run on rayon's thread
//! pool; without it they run on the calling thread.  Both paths return
//! results in input order and every work item owns its RNG seed, so output is
//! byte-identical regardless of feature selection or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..n` and collects the results in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..n` and collects the results in order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
