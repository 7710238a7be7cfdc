//! Order-preserving map over sample points.
//!
//! With the `parallel` feature (on by default) the work is spread over the
//! rayon pool; without it the same closure runs sequentially. Output order
//! always matches input order, so reports are deterministic either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// `true` when built with the `parallel` feature.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
