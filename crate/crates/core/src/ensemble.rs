//! Ordered map over ensemble paths. Results come back in path order and are
//! reduced sequentially by callers, so both execution modes give identical
//! numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism; sequential when built without `parallel`.
    #[default]
    Parallel,
}

pub fn map_paths<T, F>(execution: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Outcome of an ensemble after blow-up screening.
#[derive(Debug, Clone)]
pub struct Screened<T> {
    pub kept: Vec<T>,
    pub blowups: usize,
}

/// Drops blown-up paths when they are under 1% of the ensemble; any other
/// error, or too many blow-ups, fails the whole ensemble.
pub fn screen_blowups<T>(results: Vec<Result<T>>) -> Result<Screened<T>> {
    let paths = results.len();
    let mut kept = Vec::with_capacity(paths);
    let mut blowups = 0;
    for r in results {
        match r {
            Ok(x) => kept.push(x),
            Err(Error::BlowUp { time }) => {
                log::warn!("path blew up at t = {time}");
                blowups += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if blowups * 100 >= paths && blowups > 0 {
        return Err(Error::EnsembleBlowUp { blowups, paths });
    }
    if kept.is_empty() {
        return Err(Error::Precondition("ensemble has no paths".into()));
    }
    Ok(Screened { kept, blowups })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        assert_eq!(
            map_paths(Execution::Sequential, 1000, f),
            map_paths(Execution::Parallel, 1000, f)
        );
    }

    #[test]
    fn blowup_threshold() {
        let mut r: Vec<Result<u8>> = (0..200).map(|_| Ok(1)).collect();
        r[3] = Err(Error::BlowUp { time: 1.0 });
        assert_eq!(screen_blowups(r).unwrap().blowups, 1);
        let mut r: Vec<Result<u8>> = (0..100).map(|_| Ok(1)).collect();
        r[3] = Err(Error::BlowUp { time: 1.0 });
        assert!(matches!(screen_blowups(r), Err(Error::EnsembleBlowUp { .. })));
    }
}
