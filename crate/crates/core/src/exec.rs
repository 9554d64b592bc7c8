//! Replica fan-out.
//!
//! Work items are indexed; results always come back in index order, so any
//! reduction performed by the caller is independent of the thread count.

use rayon::prelude::*;

/// Thread budget for replica fan-out. `0` means "use rayon's default".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Threads(pub usize);

impl Threads {
    pub const SINGLE: Threads = Threads(1);
}

/// Evaluates `f(0..n)` in parallel and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, threads: Threads, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads.0 == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    if threads.0 == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.0).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    }
}
