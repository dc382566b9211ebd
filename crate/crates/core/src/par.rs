//! Sequential and rayon-backed execution of the indexed loops used
//! throughout the crate. Every helper returns results in index order, so the
//! output never depends on how work was split between threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How data-parallel loops are executed.
///
/// `Parallel` uses rayon when the crate is built with the `parallel` feature
/// and silently degrades to `Sequential` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Sequential,
    Parallel,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Parallel
        } else {
            Backend::Sequential
        }
    }
}

impl Backend {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Backend::Parallel
    }
}

pub(crate) fn map_range<T, F>(backend: Backend, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if backend.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = backend;
    (0..len).map(f).collect()
}

pub(crate) fn try_map_range<T, E, F>(backend: Backend, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if backend.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = backend;
    (0..len).map(f).collect()
}

pub(crate) fn for_each_indexed<T, F>(backend: Backend, data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if backend.is_parallel() {
        data.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    let _ = backend;
    data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backends_agree_and_preserve_order() {
        let seq = map_range(Backend::Sequential, 1000, |i| (i as f64).sqrt());
        let par = map_range(Backend::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
        assert_eq!(seq[49], 7.0);
    }

    #[test]
    fn try_map_propagates_error() {
        let r: Result<Vec<usize>, usize> =
            try_map_range(Backend::Parallel, 100, |i| if i == 57 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(57));
    }

    #[test]
    fn for_each_indexed_touches_every_slot() {
        let mut v = vec![0usize; 513];
        for_each_indexed(Backend::default(), &mut v, |i, x| *x = 2 * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
