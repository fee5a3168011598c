//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through the helpers here so that the
//! sequential path is always available. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially. Results never depend on
//! the strategy: work items are indexed and merged in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n` and collects in index order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fills `out` in chunks of `chunk` elements; `f` receives the chunk index.
pub fn fill_chunks<T, F>(exec: Execution, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Folds over `0..n` in blocks and merges the partial results in block order.
pub fn fold_range<A, F, M>(exec: Execution, n: usize, block: usize, init: A, f: F, merge: M) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(&mut A, A),
{
    let block = block.max(1);
    let n_blocks = n.div_ceil(block);
    let partials = map_range(exec, n_blocks, |b| {
        let mut acc = init.clone();
        let hi = ((b + 1) * block).min(n);
        for i in b * block..hi {
            f(&mut acc, i);
        }
        acc
    });
    let mut out = init;
    for p in partials {
        merge(&mut out, p);
    }
    out
}

/// Runs `op` inside a dedicated pool with `threads` workers.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let a = map_range(Execution::Sequential, 1000, |i| i * i);
        let b = map_range(Execution::Parallel, 1000, |i| i * i);
        assert_eq!(a, b);
        let s = |e| fold_range(e, 1001, 17, 0u64, |acc, i| *acc += i as u64, |a, b| *a += b);
        assert_eq!(s(Execution::Sequential), 500_500);
        assert_eq!(s(Execution::Parallel), 500_500);
    }
}
