//! Order-preserving data-parallel maps. With the `parallel` feature disabled
//! every execution mode runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..n).map(f).collect()`, results in index order regardless of mode.
pub fn map_indexed<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Splits `0..n` into contiguous chunks of `chunk` indices and maps each
/// chunk range; useful when per-index work is too small to schedule alone.
pub fn map_chunks<R, F>(exec: Execution, n: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = n.div_ceil(chunk);
    map_indexed(exec, count, |c| f(c * chunk..((c + 1) * chunk).min(n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(
            map_indexed(Execution::Sequential, 1000, f),
            map_indexed(Execution::Parallel, 1000, f)
        );
        let sums = map_chunks(Execution::Parallel, 10, 3, |r| r.sum::<usize>());
        assert_eq!(sums, vec![3, 12, 21, 9]);
        assert!(map_chunks(Execution::Sequential, 0, 3, |r| r.len()).is_empty());
    }
}
