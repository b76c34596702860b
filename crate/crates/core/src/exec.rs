//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature, [`Execution::Parallel`] runs on a rayon
//! pool of the requested size. Without it every mode runs sequentially.
//! Either way results come back in input order, so callers see identical
//! output for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `threads == 0` means one worker per available core.
    Parallel { threads: usize },
}

impl Execution {
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Parallel { threads: n },
            None => Execution::Parallel { threads: 0 },
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }

    /// Runs `f` inside the pool this mode describes.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel { threads } => {
                match rayon::ThreadPoolBuilder::new().num_threads(*threads).build() {
                    Ok(pool) => pool.install(f),
                    Err(_) => f(),
                }
            }
            _ => f(),
        }
    }

    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_owned<T, U, F>(&self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Folds chunks of `items` into partial summaries and merges them.
    /// `merge` must be associative and commutative for the result to be
    /// independent of the chunking.
    pub fn fold_merge<T, S, I, F, M>(&self, items: &[T], init: I, fold: F, merge: M) -> S
    where
        T: Sync,
        S: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(S, &T) -> S + Sync + Send,
        M: Fn(S, S) -> S + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().fold(&init, &fold).reduce(&init, &merge);
        }
        items.iter().fold(init(), fold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u64> = (0..10_000).collect();
        for exec in [
            Execution::Sequential,
            Execution::Parallel { threads: 1 },
            Execution::Parallel { threads: 4 },
        ] {
            let squares = exec.install(|| exec.map(&items, |x| x * x));
            assert_eq!(squares[77], 77 * 77);
            let sum = exec.install(|| exec.fold_merge(&items, || 0u64, |a, x| a + x, |a, b| a + b));
            assert_eq!(sum, 49_995_000);
            let owned = exec.map_owned(items.clone(), |x| x + 1);
            assert_eq!(owned.last(), Some(&10_000));
        }
    }

    #[test]
    fn thread_flag_mapping() {
        assert_eq!(Execution::from_threads(Some(1)), Execution::Sequential);
        assert_eq!(Execution::from_threads(Some(8)), Execution::Parallel { threads: 8 });
        assert_eq!(Execution::from_threads(None), Execution::Parallel { threads: 0 });
    }
}
