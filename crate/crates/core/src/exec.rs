//! Execution policy for the data-parallel loops.
//!
//! Every parallel map here is order-preserving: results come back in input
//! order whatever the worker count, so downstream merges stay canonical.
//! Without the `parallel` feature every policy runs sequentially.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

#[derive(Clone, Default)]
pub struct Exec {
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Exec({} workers)", self.workers())
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec::default()
    }

    /// A pool with `workers` threads; `0` means one per available core.
    pub fn parallel(workers: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
            Ok(Exec {
                pool: Some(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(Exec::default())
        }
    }

    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn is_parallel(&self) -> bool {
        self.workers() > 1
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Fallible order-preserving map; the first error in input order wins.
    pub fn try_map<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn map_preserves_order() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = Exec::sequential().map(&items, |x| x * 3);
        let par = Exec::parallel(4).unwrap().map(&items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(Exec::sequential().workers(), 1);
    }

    #[test]
    fn try_map_reports_first_error() {
        let items: Vec<u32> = (0..100).collect();
        let r = Exec::parallel(4).unwrap().try_map(&items, |&x| {
            if x >= 10 {
                Err(Error::Empty("x"))
            } else {
                Ok(x)
            }
        });
        assert!(r.is_err());
    }
}
