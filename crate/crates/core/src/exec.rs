//! Batch execution helpers.
//!
//! Trials of a batch are independent and may run data-parallel. With the
//! `parallel` feature (default) `map_indexed` fans out over the rayon pool;
//! without it the same call degrades to a plain sequential loop. Results are
//! collected in index order either way, so downstream aggregation sees the
//! same sequence and a fixed master seed reproduces identical output.
//!
//! Randomness within a single solve is never parallelized; only whole trials
//! are.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_indexed`], kept unconditionally compiled so the
/// two paths can be benchmarked against each other.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Pairwise (cascade) summation. Order-fixed and more accurate than a naive
/// left fold; aggregates over trial vectors are reproducible to the last bit
/// because trial results are always collected in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Arithmetic mean via pairwise summation; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}
