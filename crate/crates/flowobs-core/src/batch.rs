//! Mapping over independent work items, sequentially or data-parallel.
//!
//! Grid verification sweeps and batch runs are embarrassingly parallel; the
//! `parallel` feature routes them through rayon while the sequential path
//! stays available for comparison and for builds without the feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference path.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Rayon-backed path. Results keep the input order.
#[cfg(feature = "parallel")]
pub fn map_par<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Dispatches to the parallel path when the `parallel` feature is enabled,
/// the sequential path otherwise.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_par(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}
