//! Execution policy for the data-parallel sweeps (sampling, nodewise kernels,
//! verification). Results are identical under both policies: maps preserve
//! order and the only reductions used are `max`/`min`, which are exact.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    /// Rayon when the `parallel` feature is compiled in, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..len).map(f).collect()` under the given policy.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Maximum of `f(i)` over `0..len`; `NaN` values propagate as `NaN`.
pub fn max_indexed<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let pick = |a: f64, b: f64| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::NEG_INFINITY, pick);
    }
    let _ = exec;
    (0..len).map(f).fold(f64::NEG_INFINITY, pick)
}

/// Fallible variant of [`map_indexed`]; the first error by index wins.
pub fn try_map_indexed<T, E, F>(exec: Execution, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, len, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = map_indexed(Execution::Parallel, 1000, f);
        let b = map_indexed(Execution::Sequential, 1000, f);
        assert_eq!(a, b);
        assert_eq!(
            max_indexed(Execution::Parallel, 1000, f).to_bits(),
            max_indexed(Execution::Sequential, 1000, f).to_bits()
        );
    }

    #[test]
    fn nan_propagates() {
        let f = |i: usize| if i == 500 { f64::NAN } else { i as f64 };
        assert!(max_indexed(Execution::Sequential, 1000, f).is_nan());
        assert!(max_indexed(Execution::Parallel, 1000, f).is_nan());
    }

    #[test]
    fn first_error_by_index() {
        let r: Result<Vec<usize>, usize> = try_map_indexed(Execution::Parallel, 100, |i| {
            if i % 30 == 29 {
                Err(i)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(29));
    }
}
