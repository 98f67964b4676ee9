//! Thread-pool chunk executor.

use ewgeo_core::montecarlo::{ChunkExecutor, ChunkTask};
use ewgeo_core::{Error, Result};
use rayon::prelude::*;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "EWGEO_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameters(format!("{WORKERS_ENV}=\"{v}\" is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs chunks on a dedicated rayon pool. Results come back in task order,
/// so merged sums do not depend on the worker count.
pub struct PoolExecutor {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl PoolExecutor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidParameters("worker count must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameters(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl ChunkExecutor for PoolExecutor {
    fn run<T, F>(&self, tasks: &[ChunkTask], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&ChunkTask) -> T + Sync + Send,
    {
        self.pool.install(|| tasks.par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ewgeo_core::montecarlo::{plan, Chunking, Sequential};

    #[test]
    fn order_matches_sequential() {
        let tasks = plan(3, 1000, Chunking { chunk_size: 64 }).unwrap();
        let f = |t: &ChunkTask| (t.subsample, t.chunk, t.n_raw);
        let want = Sequential.run(&tasks, f);
        for w in [1, 2, 3] {
            assert_eq!(PoolExecutor::new(w).unwrap().run(&tasks, f), want);
        }
        assert!(PoolExecutor::new(0).is_err());
    }
}
