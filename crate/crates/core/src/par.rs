//! Sequential / data-parallel execution switch.
//!
//! Batch evaluations (beliefs for many I-states, stipulation checks on every
//! evaluation point, root-level search branches) go through [`Exec`]. With the
//! `parallel` feature disabled, `Exec::Parallel` silently runs sequentially so
//! results never depend on the build configuration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}

impl Exec {
    pub fn from_workers(workers: usize) -> Self {
        if workers > 1 {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }

    /// Whether this build can actually run work in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// The first item (in slice order) for which `f` returns `Some`.
    ///
    /// The parallel path may evaluate later items speculatively, but the
    /// returned value is always the one the sequential scan would return.
    pub fn find_map_first<T, R, F>(self, items: &[T], f: F) -> Option<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Option<R> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().find_map_first(f);
        }
        items.iter().find_map(f)
    }
}
