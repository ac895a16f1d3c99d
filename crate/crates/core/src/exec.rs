//! Sequential / rayon execution switch.
//!
//! Every data-parallel loop in the crate (Monte-Carlo trials, sweep points)
//! goes through [`Execution::map_indexed`], which always returns results in
//! index order. Reductions are then folded sequentially over that vector, so
//! the floating-point result does not depend on how work was split.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// One item after another on the calling thread.
    Sequential,
    /// Spread over the rayon global pool. Identical to `Sequential` when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this mode actually fans out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the outputs in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = Execution::Sequential.map_indexed(1000, |i| i * i);
        let par = Execution::Parallel.map_indexed(1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }
}
