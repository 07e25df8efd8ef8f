//! Map helpers shared by the assembly, norm and estimator kernels.
//!
//! `map_indexed` runs on the rayon pool when the `parallel` feature is
//! enabled and falls back to a plain sequential map otherwise. Results are
//! collected in index order either way, and callers reduce them sequentially,
//! so computed values are independent of the thread count.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Sequential reference path, kept available in all builds for the bench
/// suite and for pinning down thread-related misbehaviour.
pub(crate) fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

pub(crate) fn run_indexed<R, F>(n: usize, sequential: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if sequential {
        map_indexed_seq(n, f)
    } else {
        map_indexed(n, f)
    }
}
