//! Order-preserving fan-out of independent jobs.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SHIELD_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::runtime(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Runner {
    workers: usize,
}

impl Runner {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(workers_from_env()?))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0..n)` in index order. Results never depend on the worker count
    /// as long as `f` derives its randomness from the index.
    pub fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        if self.workers == 1 {
            return (0..n).map(f).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::runtime(format!("worker pool: {e}")))?;
        let out: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(f).collect());
        out.into_iter().collect()
    }
}
