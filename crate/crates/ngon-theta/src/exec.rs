use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use ngon_theta_core::theta::Executor;

pub const THREADS_ENV: &str = "NGON_THETA_THREADS";

/// Runs the indexed map on a private rayon pool; output order is the index
/// order, so results do not depend on the thread count.
pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Self {
        let pool = ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
        Pool { pool }
    }

    /// Thread count from `NGON_THETA_THREADS` if set and valid, else the
    /// number of available CPUs.
    pub fn from_env() -> Self {
        Pool::new(threads_from_env().unwrap_or_else(default_threads))
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Executor for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
