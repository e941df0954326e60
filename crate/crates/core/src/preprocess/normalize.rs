use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

/// Relative spread below which a column counts as constant.
const CONSTANT_TOLERANCE: f64 = 1e-12;

/// Zero-mean, unit-variance scaling fitted on training data.
///
/// Constant columns are dropped: `kept_columns` lists the surviving input
/// columns and `mean`/`std` are indexed in that order. `std` is the sample
/// standard deviation (n - 1 denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub n_features: usize,
    pub kept_columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let m = x.nrows();
        if m < 2 {
            return Err(Error::Preprocess(format!("need at least 2 samples, got {m}")));
        }
        let mut kept_columns = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for (j, col) in x.column_iter().enumerate() {
            let mu = col.mean();
            let ss: f64 = col.iter().map(|v| (v - mu).powi(2)).sum();
            let population_std = (ss / m as f64).sqrt();
            let magnitude = col.amax();
            if magnitude == 0.0 || population_std / magnitude < CONSTANT_TOLERANCE {
                continue;
            }
            kept_columns.push(j);
            mean.push(mu);
            std.push((ss / (m - 1) as f64).sqrt());
        }
        if kept_columns.is_empty() {
            return Err(Error::Preprocess("every column is constant".into()));
        }
        Ok(Self { n_features: x.ncols(), kept_columns, mean, std })
    }

    pub fn output_dim(&self) -> usize {
        self.kept_columns.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        shape(self.n_features, x.ncols())?;
        Ok(DMatrix::from_fn(x.nrows(), self.kept_columns.len(), |i, k| {
            (x[(i, self.kept_columns[k])] - self.mean[k]) / self.std[k]
        }))
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        shape(self.n_features, row.len())?;
        Ok(self
            .kept_columns
            .iter()
            .enumerate()
            .map(|(k, &j)| (row[j] - self.mean[k]) / self.std[k])
            .collect())
    }

    /// Map normalized values back to the kept input columns.
    pub fn invert(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        shape(self.kept_columns.len(), z.ncols())?;
        Ok(DMatrix::from_fn(z.nrows(), z.ncols(), |i, k| self.mean[k] + self.std[k] * z[(i, k)]))
    }
}
