//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) independent work items run on the
//! rayon pool; without it, or under [`Exec::Sequential`], they run in order
//! on the calling thread. Results always come back in index order, so any
//! reduction over them is independent of scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn map_slice<'a, I, T, F>(self, items: &'a [I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&'a I) -> T + Sync + Send,
    {
        self.map_indexed(items.len(), |i| f(&items[i]))
    }
}
