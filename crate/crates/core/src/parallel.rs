//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) items are spread over the
//! rayon pool; without it, or when [`Execution::Sequential`] is asked for,
//! they run in order on the calling thread. Output order always matches
//! input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
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

pub fn map_indexed<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map_indexed(&items, Execution::Sequential, |i, x| i as u64 * 3 + x);
        let par = map_indexed(&items, Execution::Parallel, |i, x| i as u64 * 3 + x);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 40);
    }
}
