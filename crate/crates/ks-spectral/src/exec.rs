//! Data-parallel execution helpers with a sequential fallback.
//!
//! Parameter sweeps (ν-grids, coercivity trials, spectral-gap trials) are
//! embarrassingly parallel: each point is a pure function of its inputs.
//! With the `parallel` feature (default) the maps below fan out over rayon;
//! without it they degrade to plain sequential iteration so the crate builds
//! on targets without threads. Results are always returned in input order, so
//! the two paths are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, in parallel when the `parallel` feature is enabled.
pub fn map_collect<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over indices `0..n`, in parallel when the `parallel` feature is
/// enabled.
pub fn map_indices<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential map, kept for benchmarking the parallel speedup.
pub fn map_collect_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Always-sequential index map, kept for benchmarking the parallel speedup.
pub fn map_indices_seq<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}
