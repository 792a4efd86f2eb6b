//! Data-parallel helpers.
//!
//! Every helper takes a `parallel` flag so callers (and the benches) can pick
//! the execution mode at run time. Without the `parallel` feature the flag is
//! ignored and everything runs on the calling thread. Results are always
//! returned in index order, so reductions done by the caller are
//! deterministic regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// True when the crate was built with rayon support.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `0..len`, collecting results in order.
pub fn map_range<R, F>(len: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..len).map(f).collect()
}

/// Maps `f` over the items of a slice, collecting results in order.
pub fn map_slice<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Calls `f(row_index, row)` on each `stride`-sized chunk of `data` and
/// returns the per-row results in row order.
pub fn map_rows_mut<T, R, F>(data: &mut [T], stride: usize, parallel: bool, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return data
            .par_chunks_mut(stride)
            .enumerate()
            .map(|(i, row)| f(i, row))
            .collect();
    }
    let _ = parallel;
    data.chunks_mut(stride)
        .enumerate()
        .map(|(i, row)| f(i, row))
        .collect()
}

/// Runs two closures, concurrently when allowed.
pub fn join<A, B, RA, RB>(parallel: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return rayon::join(a, b);
    }
    let _ = parallel;
    (a(), b())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = map_range(100, false, |i| (i as f64).sqrt());
        let par = map_range(100, true, |i| (i as f64).sqrt());
        assert_eq!(seq, par);

        let mut a = vec![1.0f64; 30];
        let mut b = a.clone();
        let ra = map_rows_mut(&mut a, 10, false, |i, row| {
            row.iter_mut().for_each(|v| *v += i as f64);
            row.iter().sum::<f64>()
        });
        let rb = map_rows_mut(&mut b, 10, true, |i, row| {
            row.iter_mut().for_each(|v| *v += i as f64);
            row.iter().sum::<f64>()
        });
        assert_eq!(ra, rb);
        assert_eq!(a, b);
    }
}

/// Sizes the global rayon pool (`0` lets rayon choose). Has no effect
/// without the `parallel` feature. Fails if the pool was already built.
pub fn configure_threads(threads: usize) -> crate::Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| crate::Error::Config(format!("THREADS: {e}")))?;
    }
    let _ = threads;
    Ok(())
}
