//! Execution policy for the data-parallel loops (Monte Carlo batches, plan
//! terms, ADI line sweeps).
//!
//! With the `parallel` feature disabled every policy runs sequentially, so the
//! same call sites compile either way. Results are always returned in input
//! order, which keeps reductions deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, collecting results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps `f` over a slice, collecting results in order.
    pub fn map_slice<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Runs `f(chunk_index, chunk)` over consecutive mutable chunks.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    /// Like [`Execution::for_each_chunk_mut`] but with a read-only companion
    /// slice chunked identically.
    pub fn for_each_zip_chunk_mut<T, F>(self, src: &[T], dst: &mut [T], chunk_len: usize, f: F)
    where
        T: Send + Sync,
        F: Fn(&[T], &mut [T]) + Sync + Send,
    {
        assert_eq!(src.len(), dst.len());
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            src.par_chunks(chunk_len)
                .zip(dst.par_chunks_mut(chunk_len))
                .for_each(|(s, d)| f(s, d));
            return;
        }
        src.chunks(chunk_len)
            .zip(dst.chunks_mut(chunk_len))
            .for_each(|(s, d)| f(s, d));
    }
}
