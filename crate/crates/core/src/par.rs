//! Execution strategy for the data-parallel sweeps.
//!
//! With the `parallel` feature (default) work fans out over rayon; without
//! it, or with [`Exec::Sequential`], the same closures run in a plain loop.
//! Every reduction here is an order-independent sum, so both paths give
//! identical results.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Fold `f(i)` for `i` in `0..n` into accumulators of type `A`, then merge.
pub fn map_reduce<A, F, M>(
    exec: Exec,
    n: u64,
    chunk: u64,
    init: impl Fn() -> A + Sync + Send,
    f: F,
    merge: M,
) -> A
where
    A: Send,
    F: Fn(&mut A, u64) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let chunk = chunk.max(1);
    let chunks = n.div_ceil(chunk);
    let run_chunk = |c: u64| {
        let mut acc = init();
        let hi = ((c + 1) * chunk).min(n);
        for i in c * chunk..hi {
            f(&mut acc, i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..chunks)
            .into_par_iter()
            .map(run_chunk)
            .reduce(&init, &merge);
    }
    let _ = exec;
    (0..chunks).map(run_chunk).fold(init(), merge)
}

/// Apply `f` to every item, preserving order.
pub fn map_collect<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Run with a dedicated pool of `workers` threads when requested.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(w) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}
