//! Shared worker pool for grid scans and curve sweeps.

use rayon::{ThreadPool, ThreadPoolBuilder};
use std::sync::OnceLock;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BELLSCOPE_THREADS";

/// Pool sized by `BELLSCOPE_THREADS` when set to a positive integer, else rayon's default.
pub fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|n| *n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("thread pool")
    })
}
