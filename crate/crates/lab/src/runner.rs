//! Thread-pool replicate runner.

use rayon::prelude::*;
use relcap::ReplicateRunner;

use crate::error::{LabError, LabResult};

pub struct RayonRunner {
    pool: rayon::ThreadPool,
}

impl RayonRunner {
    /// `threads == 0` lets rayon pick the number of workers.
    pub fn new(threads: usize) -> LabResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LabError::Config(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicateRunner for RayonRunner {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
