//! Data-parallel helpers. With the `parallel` feature the closures fan out
//! over the rayon pool; without it they run in order on the calling thread.
//! Either way results come back in index order, so reductions are
//! reproducible.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0..len)` and returns the results in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps a slice, preserving order.
pub fn map_slice<'a, S, T, F>(items: &'a [S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&'a S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// True when compiled with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
