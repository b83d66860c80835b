//! Data-parallel dispatch. With the `parallel` feature the closures run on
//! the rayon pool; without it the same code runs sequentially. Callers only
//! pass pure closures, so both paths produce identical results.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

pub(crate) fn map_indices_serial<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
