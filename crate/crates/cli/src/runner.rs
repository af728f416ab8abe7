//! Deterministic parallel Monte Carlo driver: trials map over a local rayon
//! pool, results come back indexed by trial, and aggregation happens in trial
//! order afterwards — worker count changes wall time only, never results.

use crate::error::CliError;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

pub fn run_trials<T, F>(workers: usize, trials: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot build worker pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let tick = (trials / 20).max(1);
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let out = f(trial);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % tick == 0 || k == trials {
                    eprintln!("progress: {k}/{trials} trials");
                }
                out
            })
            .collect()
    })
}
