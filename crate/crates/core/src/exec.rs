//! Execution backend for the data-parallel inner loops.
//!
//! Every parallel loop in the crate maps an index range to independent
//! results and collects them in index order, so both backends produce
//! bit-identical output. Without the `parallel` feature, [`Backend::Parallel`]
//! silently runs sequentially.

/// How the independent per-window / per-leg / per-series work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Sequential,
    Parallel,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Parallel
        } else {
            Backend::Sequential
        }
    }
}

impl Backend {
    /// True when this backend will actually fan out on the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Backend::Parallel
    }
}

// Below this many items the rayon split overhead dominates.
const MIN_PARALLEL_LEN: usize = 64;

/// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
pub fn map_indices<T, F>(backend: Backend, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indices_min(backend, n, MIN_PARALLEL_LEN, f)
}

/// Like [`map_indices`] but with an explicit fan-out threshold, for loops whose
/// individual items are expensive (one objective evaluation per leg).
pub fn map_indices_min<T, F>(backend: Backend, n: usize, min_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if backend == Backend::Parallel && n >= min_len.max(2) {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = (backend, min_len);
    (0..n).map(f).collect()
}
