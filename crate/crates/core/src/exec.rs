//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool.
//! Results are always returned in input order, so every reduction performed
//! by the caller sees the same floating-point order regardless of threading.

/// How to run independent work items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// `f(0), ..., f(n - 1)` in order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
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

    /// `f` over a slice, in order.
    pub fn map_slice<A, T, F>(self, items: &[A], f: F) -> Vec<T>
    where
        A: Sync,
        T: Send,
        F: Fn(&A) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let a = Execution::Parallel.map_range(1000, |i| (i as f64).sqrt());
        let b = Execution::Sequential.map_range(1000, |i| (i as f64).sqrt());
        assert_eq!(a, b);
        let v: Vec<u32> = (0..50).collect();
        assert_eq!(Execution::Parallel.map_slice(&v, |x| x * 2), Execution::Sequential.map_slice(&v, |x| x * 2));
    }
}
