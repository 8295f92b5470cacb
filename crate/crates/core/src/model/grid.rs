use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// One candidate of an input-window sweep.
#[derive(Debug, Clone)]
pub struct GridRow<E> {
    pub w_in: usize,
    /// Test R²; `None` when the candidate failed.
    pub r2: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
    pub outcome: Option<E>,
}

#[derive(Debug, Clone)]
pub struct GridSearch<E> {
    pub best_w_in: usize,
    /// Rows in candidate order.
    pub rows: Vec<GridRow<E>>,
}

impl<E> GridSearch<E> {
    pub fn best(&self) -> &GridRow<E> {
        self.rows.iter().find(|r| r.w_in == self.best_w_in).expect("best candidate is one of the rows")
    }
}

/// Index of the highest R², ties going to the smaller `w_in`. Non-finite scores are ignored.
pub fn select_best(scores: &[(usize, Option<f64>)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(w_in, r2) in scores {
        let Some(r2) = r2.filter(|v| v.is_finite()) else { continue };
        best = match best {
            Some((bw, br)) if br > r2 || (br == r2 && bw < w_in) => Some((bw, br)),
            _ => Some((w_in, r2)),
        };
    }
    best.map(|(w, _)| w)
}

/// Train and score one model per candidate `w_in` (in parallel), returning the
/// full table and the argmax. `run` returns the test R² and any artifact to keep.
pub fn grid_search_input_window<E, F>(candidates: &[usize], run: F) -> Result<GridSearch<E>>
where
    E: Send,
    F: Fn(usize) -> Result<(f64, E)> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::Config("input-window candidate set is empty".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate input-window candidates".into()));
    }
    let rows: Vec<GridRow<E>> = candidates
        .par_iter()
        .map(|&w_in| {
            let started = Instant::now();
            let result = run(w_in);
            let seconds = started.elapsed().as_secs_f64();
            match result {
                Ok((r2, outcome)) => GridRow { w_in, r2: Some(r2), seconds, error: None, outcome: Some(outcome) },
                Err(e) => GridRow { w_in, r2: None, seconds, error: Some(e.to_string()), outcome: None },
            }
        })
        .collect();
    let scores: Vec<(usize, Option<f64>)> = rows.iter().map(|r| (r.w_in, r.r2)).collect();
    match select_best(&scores) {
        Some(best_w_in) => Ok(GridSearch { best_w_in, rows }),
        None => {
            let reasons: Vec<String> =
                rows.iter().map(|r| format!("w_in={}: {}", r.w_in, r.error.as_deref().unwrap_or("non-finite R²"))).collect();
            Err(Error::Data(format!("every input-window candidate failed ({})", reasons.join("; "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax() {
        let r = grid_search_input_window(&[5, 10, 15], |w| Ok(([0.6, 0.7, 0.65][w / 5 - 1], ()))).unwrap();
        assert_eq!(r.best_w_in, 10);
        assert_eq!(r.rows.iter().map(|r| r.w_in).collect::<Vec<_>>(), vec![5, 10, 15]);
    }

    #[test]
    fn tie_goes_to_smaller_window() {
        let r = grid_search_input_window(&[10, 5], |_| Ok((0.7, ()))).unwrap();
        assert_eq!(r.best_w_in, 5);
    }

    #[test]
    fn failed_candidates_are_skipped() {
        let r = grid_search_input_window(&[5, 10], |w| if w == 10 { Err(Error::Empty("x")) } else { Ok((0.1, ())) }).unwrap();
        assert_eq!(r.best_w_in, 5);
        assert!(r.rows[1].error.is_some());
    }

    #[test]
    fn all_failed_is_error() {
        assert!(grid_search_input_window::<(), _>(&[5, 10], |_| Err(Error::Empty("x"))).is_err());
        assert!(grid_search_input_window(&[5], |_| Ok((f64::NAN, ()))).is_err());
        assert!(grid_search_input_window::<(), _>(&[], |_| Ok((1.0, ()))).is_err());
    }
}
