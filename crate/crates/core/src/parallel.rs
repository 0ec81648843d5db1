//! Index-ordered parallel map. Output order never depends on the schedule.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn for_each_indexed<F>(len: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().for_each(f)
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_indexed<F>(len: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    (0..len).for_each(f)
}

/// Like [`map_indexed`], with per-worker scratch state built by `init`.
#[cfg(feature = "parallel")]
pub fn map_indexed_init<T, S, I, F>(len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map_init(init, f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed_init<T, S, I, F>(len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    let mut state = init();
    (0..len).map(|i| f(&mut state, i)).collect()
}
