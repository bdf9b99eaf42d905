//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! rayon's pool; without it the same closures run in a plain loop. Results
//! are always returned in index order, so output never depends on scheduling.

/// `f(0), f(1), ..., f(n - 1)` collected in order.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Number of indices in `0..n` for which `pred` holds.
#[cfg(feature = "parallel")]
pub fn count_range<F>(n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().filter(|&i| pred(i)).count()
}

#[cfg(not(feature = "parallel"))]
pub fn count_range<F>(n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    (0..n).filter(|&i| pred(i)).count()
}

/// Same as [`map_range`] but always sequential; used by benches and
/// equivalence tests as the reference path.
pub fn map_range_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Independent random stream for work item `index` under a run seed. The
/// stream depends only on `(seed, index)`, never on which thread runs it.
pub fn stream_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
