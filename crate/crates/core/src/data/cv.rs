use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kfold_split, Dataset};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Grid used for both `t` and `lambda1`.
pub const DEFAULT_GRID: [f64; 5] = [0.01, 0.1, 0.25, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub t_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub folds: usize,
    pub repeats: usize,
}

impl CvGrid {
    pub fn standard(repeats: usize) -> Self {
        Self {
            t_values: DEFAULT_GRID.to_vec(),
            lambda_values: DEFAULT_GRID.to_vec(),
            folds: 3,
            repeats,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() || self.lambda_values.is_empty() {
            return Err(Error::invalid("grid", "needs at least one t and one lambda1"));
        }
        let ok = |v: &f64| v.is_finite() && *v > 0.0;
        if !self.t_values.iter().all(ok) || !self.lambda_values.iter().all(ok) {
            return Err(Error::invalid("grid", "values must be finite and positive"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds", "must be at least 2"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats", "must be at least 1"));
        }
        Ok(())
    }
}

/// One training run inside a grid cell.
pub struct CvTask<'a> {
    pub t: f64,
    pub lambda1: f64,
    pub train: &'a Dataset<f64>,
    pub validate: &'a Dataset<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRun {
    pub accuracy: f64,
    pub n_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellScore {
    pub t: f64,
    pub lambda1: f64,
    pub mean_accuracy: f64,
    pub mean_n_iter: f64,
    /// Summed wall time of the cell's runs, in seconds.
    pub cpu_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvOutcome {
    pub best_t: f64,
    pub best_lambda1: f64,
    /// Row-major over `(t, lambda1)`.
    pub cells: Vec<CellScore>,
}

/// Repeated k-fold grid search; the cell with the best mean validation
/// accuracy wins, ties going to smaller `t` and then smaller `lambda1`.
///
/// Fold splits depend only on `(seed, repeat)` and are shared by all cells;
/// each run gets `derive_seed(seed, [t_idx, lambda_idx, repeat, fold])`.
pub fn cv_grid_search<F>(data: &Dataset<f64>, grid: &CvGrid, seed: u64, evaluate: F) -> Result<CvOutcome>
where
    F: Fn(&CvTask<'_>) -> Result<CellRun> + Sync,
{
    grid.validate()?;
    let mut splits = Vec::with_capacity(grid.repeats);
    for r in 0..grid.repeats {
        let folds = kfold_split(data.len(), grid.folds, derive_seed(seed, &[r as u64]))?;
        let mut pairs = Vec::with_capacity(folds.len());
        for (f, fold) in folds.iter().enumerate() {
            pairs.push((
                data.subset(format!("{}-r{r}-f{f}-train", data.name), &fold.train)?,
                data.subset(format!("{}-r{r}-f{f}-validate", data.name), &fold.validate)?,
            ));
        }
        splits.push(pairs);
    }

    let coords: Vec<(usize, usize)> = (0..grid.t_values.len())
        .flat_map(|i| (0..grid.lambda_values.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<CellScore>> = coords
        .par_iter()
        .map(|&(ti, li)| {
            let (t, lambda1) = (grid.t_values[ti], grid.lambda_values[li]);
            let wrap = |e: Error| Error::CvCell {
                t,
                lambda1,
                source: Box::new(e),
            };
            let (mut acc, mut iters, mut time, mut runs) = (0.0, 0.0, 0.0, 0usize);
            for (r, pairs) in splits.iter().enumerate() {
                for (f, (train, validate)) in pairs.iter().enumerate() {
                    let task = CvTask {
                        t,
                        lambda1,
                        train,
                        validate,
                        seed: derive_seed(seed, &[ti as u64, li as u64, r as u64, f as u64]),
                    };
                    let start = Instant::now();
                    let run = evaluate(&task).map_err(wrap)?;
                    time += start.elapsed().as_secs_f64();
                    acc += run.accuracy;
                    iters += run.n_iter as f64;
                    runs += 1;
                }
            }
            Ok(CellScore {
                t,
                lambda1,
                mean_accuracy: acc / runs as f64,
                mean_n_iter: iters / runs as f64,
                cpu_time: time,
            })
        })
        .collect();
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let best = cells
        .iter()
        .fold(None::<&CellScore>, |best, c| match best {
            Some(b) if !better(c, b) => Some(b),
            _ => Some(c),
        })
        .expect("grid is nonempty");
    Ok(CvOutcome {
        best_t: best.t,
        best_lambda1: best.lambda1,
        cells,
    })
}

fn better(c: &CellScore, b: &CellScore) -> bool {
    if c.mean_accuracy != b.mean_accuracy {
        return c.mean_accuracy > b.mean_accuracy;
    }
    (c.t, c.lambda1) < (b.t, b.lambda1)
}
