//! Feature-gated parallelism helpers.
//!
//! With the `parallel` feature (default) batch loops are dispatched through
//! rayon; without it the same helpers degrade to plain sequential iteration,
//! so library behaviour is identical either way.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Runs `f` on a thread pool bounded to `jobs` workers.
///
/// `jobs = None` uses the default pool size. Without the `parallel` feature
/// the bound is meaningless and `f` simply runs on the current thread.
#[cfg(feature = "parallel")]
pub(crate) fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build worker pool");
            pool.install(f)
        }
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn with_jobs<R>(jobs: Option<usize>, f: impl FnOnce() -> R) -> R {
    let _ = jobs;
    f()
}
