//! Per-channel data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the closure runs on the current rayon pool;
//! without it the same code compiles to a plain iterator. Outputs are
//! collected in index order, so results never depend on the schedule.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Applies `f` to each output slot of `out`, indexed. Used by the Raman
/// right-hand side where the per-row dot products are independent.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_slot<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    use rayon::prelude::*;
    out.par_iter_mut()
        .enumerate()
        .for_each(|(i, slot)| f(i, slot));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_slot<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    for (i, slot) in out.iter_mut().enumerate() {
        f(i, slot);
    }
}
