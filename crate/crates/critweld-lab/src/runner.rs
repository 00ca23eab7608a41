//! Replica-parallel execution with deterministic merge: replica r always uses
//! `RngStream::new(seed, r)`, results are collected in replica order, so the
//! merged output is identical for any worker count.

use critweld_core::RngStream;
use rayon::prelude::*;

pub fn run_replicas<T, F>(replicas: u64, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngStream) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|r| f(RngStream::new(seed, r)))
            .collect()
    })
}
