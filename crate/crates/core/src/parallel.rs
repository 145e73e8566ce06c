//! Data-parallel map helpers. With the `parallel` feature (default) work is
//! spread over the rayon pool; without it every call runs sequentially.
//! Output order always matches input order, so results are identical on
//! both paths.

use crate::error::{Error, Result};

/// Execution path for batch helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether `Parallel` actually uses threads in this build.
    pub const fn threads_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map_with<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

pub fn try_map_with<T, U, F>(exec: Exec, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    map_with(exec, items, f).into_iter().collect()
}

pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_with(Exec::Parallel, items, f)
}

/// Caps the global pool. Has no effect without the `parallel` feature, and
/// fails if the pool was already initialised with a different size.
pub fn configure_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err()
            && rayon::current_num_threads() != n
        {
            return Err(Error::InvalidConfig("thread pool already initialised".into()));
        }
    }
    Ok(())
}
