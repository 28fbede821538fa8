//! Data-parallel helpers with a sequential fallback.
//!
//! Built with the default `parallel` feature the helpers fan work out over
//! rayon's global pool; without it they run the identical closures in order.
//! Callers stay oblivious: results are returned in input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sum `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn sum_f64<T, F>(items: Vec<T>, f: F) -> f64
where
    T: Send,
    F: Fn(T) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).sum()
    }
}

/// Maximum of `f` over `items` (0.0 for an empty list), parallel when enabled.
pub fn max_f64<T, F>(items: Vec<T>, f: F) -> f64
where
    T: Send,
    F: Fn(T) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).fold(|| 0.0f64, f64::max).reduce(|| 0.0f64, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).fold(0.0f64, f64::max)
    }
}
