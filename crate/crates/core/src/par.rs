//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature (default) the map runs on the rayon thread
//! pool; without it, a plain sequential loop. Output order always matches
//! input order, so results are deterministic either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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
