//! Data-parallel map used by the per-point searches. With the `parallel`
//! feature off, everything runs on the calling thread.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool; same as `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

/// `items.map(f).collect()`, order preserved.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Counts the indices in `0..count` for which `f` holds.
pub fn count_range<F>(exec: Execution, count: u64, f: F) -> u64
where
    F: Fn(u64) -> bool + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().filter(|&i| f(i)).count() as u64
        }
        _ => (0..count).filter(|&i| f(i)).count() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let items: Vec<u32> = (0..100).collect();
        let a = map(Execution::Sequential, &items, |x| x * x);
        let b = map(Execution::Parallel, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(count_range(Execution::Parallel, 10, |i| i % 2 == 0), 5);
        assert_eq!(count_range(Execution::Sequential, 10, |i| i % 2 == 0), 5);
    }
}
