use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable capping the number of simulation threads.
pub const THREADS_ENV: &str = "COLLISION_LAB_THREADS";

fn configured_pool() -> Option<&'static ThreadPool> {
    static POOL: OnceLock<Option<ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
        if n == 0 {
            return None;
        }
        ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

/// Runs `f` on the capped pool if one is configured, otherwise on the global pool.
pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match configured_pool() {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
