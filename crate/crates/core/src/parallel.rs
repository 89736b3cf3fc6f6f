//! Thread-count control for the data-parallel kernels.

use crate::error::{Error, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SPMT_THREADS";

/// Parses `SPMT_THREADS`; unset or empty means "rayon's default".
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => parse_threads(&v).map(Some),
        Err(_) => Ok(None),
    }
}

pub fn parse_threads(v: &str) -> Result<usize> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
    }
}

/// A dedicated pool; `None` lets rayon pick.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}
