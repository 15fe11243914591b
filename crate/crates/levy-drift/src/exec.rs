use levy_drift_core::Executor;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::CliError;

/// Overrides the worker count when `--threads` is not given.
pub const THREADS_ENV: &str = "LEVY_DRIFT_THREADS";

/// Runs grid and path work on a dedicated rayon pool. Results come back in
/// index order, so outputs do not depend on the worker count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    pub fn new(threads: Option<usize>) -> Result<Self, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Config("thread count must be positive".into()));
            }
            b = b.num_threads(n);
        }
        let pool = b
            .build()
            .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Parallel { pool })
    }

    /// `flag`, else the environment override, else one worker per core.
    pub fn from_flag_or_env(flag: Option<usize>) -> Result<Self, CliError> {
        let n = match flag {
            Some(n) => Some(n),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                    CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))
                })?),
                Err(_) => None,
            },
        };
        Self::new(n)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
