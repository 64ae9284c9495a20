//! Batch execution: data-parallel over rayon when the `parallel` feature is on,
//! sequential otherwise. Results always come back in batch order.

/// How batches are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses the global pool.
    #[default]
    Parallel,
    Threads(usize),
}

impl Execution {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Threads(n),
            None => Execution::Parallel,
        }
    }
}

/// Evaluates `f(0), …, f(n − 1)` and returns the results in index order.
pub fn map_batches<T, F>(n: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            Execution::Threads(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        (0..n).map(f).collect()
    }
}
