//! Deterministic per-trial seeding and order-preserving parallel folds.
//!
//! Trial `i` of an experiment with base seed `s` always draws from ChaCha8
//! stream `i` of seed `s`, and per-trial results are folded in trial order,
//! so outputs do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SLEPIAN_MTM_THREADS";

const BLOCK: usize = 64;

pub fn trial_rng(base_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(trial);
    rng
}

/// Reads [`THREADS_ENV`]; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` inside a pool of `threads` workers (rayon's default when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Maps `trial -> T` in parallel over `0..trials` and folds the results into
/// `acc` strictly in trial order.
pub fn fold_trials<T, A, M, F>(trials: u64, mut acc: A, map: M, mut fold: F) -> Result<A>
where
    T: Send,
    M: Fn(u64) -> Result<T> + Sync,
    F: FnMut(&mut A, T),
{
    let mut start = 0u64;
    while start < trials {
        let end = (start + BLOCK as u64).min(trials);
        let block: Vec<Result<T>> = (start..end).into_par_iter().map(&map).collect();
        for item in block {
            fold(&mut acc, item?);
        }
        start = end;
    }
    Ok(acc)
}
