//! Datasets: synthetic generation, file loaders, splits and grid search.

mod cv;
mod io;
mod kfold;
mod synthetic;

pub use cv::{cv_grid_search, CellRun, CellScore, CvGrid, CvOutcome, CvTask, DEFAULT_GRID};
pub use io::{load_csv, load_libsvm, parse_csv, parse_libsvm, write_csv, LabelMap, Loaded};
pub use kfold::{kfold_split, Fold};
pub use synthetic::{generate_synthetic, random_point_in_ball, SyntheticData, NONZERO_FRACTION};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::svm::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<Sample<T>>,
    dim: usize,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    /// Requires at least one sample and a uniform feature dimension.
    pub fn new(name: impl Into<String>, samples: Vec<Sample<T>>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let dim = first.z.dim();
        for s in &samples {
            s.z.ensure_dim(dim)?;
        }
        Ok(Self {
            samples,
            dim,
            name: name.into(),
        })
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sub-dataset in the order given by `indices`.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self> {
        Self::new(name, indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    pub fn positive_fraction(&self) -> f64 {
        let pos = self.samples.iter().filter(|s| s.y > 0).count();
        pos as f64 / self.len() as f64
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    z: s.z.cast(),
                    y: s.y,
                })
                .collect(),
            dim: self.dim,
            name: self.name.clone(),
        }
    }
}
