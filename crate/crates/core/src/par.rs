//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, [`Execution::Parallel`] maps over items on
//! the rayon pool; without it every call runs sequentially. Results always
//! come back in input order, so reductions done by the caller keep a fixed
//! summation order and stay bit-identical across modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Execution {
    /// `Parallel` when requested and compiled in, otherwise `Sequential`.
    pub fn from_flag(parallel: bool) -> Self {
        if parallel && cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps `f` over consecutive chunks of `chunk` items.
    pub fn map_chunks<T, R, F>(self, items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&[T]) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_chunks(chunk).map(f).collect(),
            _ => items.chunks(chunk).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map_chunks(&items, 7, |c| c.iter().sum::<u64>());
        let par = Execution::from_flag(true).map_chunks(&items, 7, |c| c.iter().sum::<u64>());
        assert_eq!(seq, par);
        assert_eq!(Execution::from_flag(true).map(&items, |x| x * 2)[999], 1998);
    }
}
