//! Data-parallel execution helpers with a sequential fallback.
//!
//! With the `parallel` feature (the default) batch maps run on the rayon
//! thread pool; without it they run sequentially. Every call site collects
//! into index order or reduces over integers, so results are bitwise
//! identical under either execution mode. The `*_seq` variants are always
//! sequential and exist so benchmarks can compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential counterpart of [`map_collect`], kept unconditionally for
/// benchmark comparisons.
pub fn map_collect_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Count items satisfying `pred`. Integer reduction, order-independent.
#[cfg(feature = "parallel")]
pub fn count_matching<T: Sync>(items: &[T], pred: impl Fn(&T) -> bool + Sync) -> usize {
    items.par_iter().filter(|it| pred(it)).count()
}

/// Count items satisfying `pred`.
#[cfg(not(feature = "parallel"))]
pub fn count_matching<T>(items: &[T], pred: impl Fn(&T) -> bool) -> usize {
    items.iter().filter(|it| pred(it)).count()
}

/// Sequential counterpart of [`count_matching`].
pub fn count_matching_seq<T>(items: &[T], pred: impl Fn(&T) -> bool) -> usize {
    items.iter().filter(|it| pred(it)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map_collect(&xs, |x| x * x);
        let seq = map_collect_seq(&xs, |x| x * x);
        assert_eq!(par, seq);
        assert_eq!(
            count_matching(&xs, |x| x % 3 == 0),
            count_matching_seq(&xs, |x| x % 3 == 0)
        );
    }

    #[test]
    fn indexed_map_preserves_order() {
        let out = map_indexed(64, |i| i as i64 - 3);
        assert_eq!(out[0], -3);
        assert_eq!(out[63], 60);
    }
}
