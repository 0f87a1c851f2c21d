//! Path-parallel map with a scheduling-independent result order.

/// Evaluates `f(0..count)` and returns the results in index order. With the
/// `parallel` feature the work runs on a rayon pool of `threads` workers
/// (`None` = rayon's default); reductions over the returned vector are then
/// independent of the worker count.
pub fn map_indexed<T, F>(threads: Option<usize>, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
        match threads {
            Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(run),
                Err(_) => (0..count).map(&f).collect(),
            },
            _ => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        (0..count).map(f).collect()
    }
}
