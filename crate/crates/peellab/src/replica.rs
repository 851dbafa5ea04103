//! Replica-parallel execution with one RNG stream per replica.

use crate::error::{Error, Result};
use crate::sampling::RngStream;
use rayon::prelude::*;
use std::ops::Range;

/// Number of workers when the caller passes 0.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Run replica `i` on stream `(master_seed, i)` for `i < replicas`; results come back in replica order,
/// so output does not depend on `workers`.
pub fn run_replicas<T, F>(replicas: u64, workers: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    run_replica_range(0..replicas, workers, master_seed, f)
}

/// As [`run_replicas`] over an arbitrary block of stream ids.
pub fn run_replica_range<T, F>(streams: Range<u64>, workers: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let workers = if workers == 0 { default_workers() } else { workers };
    let job = |i: u64| {
        let mut rng = RngStream::new(master_seed, i);
        f(&mut rng)
    };
    if workers == 1 {
        return streams.map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| streams.into_par_iter().map(job).collect())
}
