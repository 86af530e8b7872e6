//! Execution strategy for the data-parallel loops.
//!
//! Every parallel map preserves input order and all reductions happen
//! sequentially afterwards, so results are bit-identical between strategies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise runs sequentially.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Fills `out` row by row; `f` receives the row index and the row slice.
    pub fn fill_rows<T, F>(self, out: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row)),
            _ => out
                .chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row)),
        }
    }
}
