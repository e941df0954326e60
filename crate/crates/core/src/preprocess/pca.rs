//! PCA of a zero-mean data matrix.
//!
//! `X = sum_i t_i p_i^T`, with loadings `p_i` the eigenvectors of the sample
//! covariance sorted by decreasing eigenvalue. Keeping the first `l` terms
//! gives the model part `X_hat`; the rest is the residual `E`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

/// Components explaining less than this fraction of the variance are dropped.
pub const DEFAULT_CUTOFF: f64 = 0.02;

/// Column means larger than this (relative to the column scale) mean the
/// caller forgot to normalize.
const ZERO_MEAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub n_features: usize,
    pub n_samples: usize,
    /// Covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub variance_fractions: Vec<f64>,
    /// One unit vector of length `n_features` per component, row-major.
    pub loadings: Vec<Vec<f64>>,
    pub retained_count: usize,
    pub cutoff: f64,
}

impl PcaModel {
    pub fn fit(x: &DMatrix<f64>, cutoff: f64) -> Result<Self> {
        let (m, n) = x.shape();
        if m < 2 || n == 0 {
            return Err(Error::Preprocess(format!("PCA needs at least 2 samples, got {m}x{n}")));
        }
        if !(0.0..1.0).contains(&cutoff) {
            return Err(Error::Preprocess(format!("cutoff {cutoff} outside [0, 1)")));
        }
        for (j, col) in x.column_iter().enumerate() {
            let scale = col.amax().max(1.0);
            if col.mean().abs() > ZERO_MEAN_TOLERANCE * scale {
                return Err(Error::Preprocess(format!("column {j} is not zero-mean")));
            }
        }

        let cov = (x.transpose() * x) / (m - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..n).collect();
        // Stable sort keeps index order for equal eigenvalues.
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Preprocess("input has rank 0".into()));
        }
        let variance_fractions: Vec<f64> = eigenvalues.iter().map(|l| l / total).collect();
        let loadings = order
            .iter()
            .map(|&k| {
                let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                orient(&mut v);
                v
            })
            .collect();
        let retained_count = variance_fractions.iter().take_while(|&&f| f >= cutoff).count().max(1);

        Ok(Self { n_features: n, n_samples: m, eigenvalues, variance_fractions, loadings, retained_count, cutoff })
    }

    /// Copy of the model keeping `l` components, `1 <= l <= n_features`.
    pub fn with_retained(&self, l: usize) -> Result<Self> {
        if l == 0 || l > self.loadings.len() {
            return Err(Error::Preprocess(format!("cannot retain {l} of {} components", self.loadings.len())));
        }
        Ok(Self { retained_count: l, ..self.clone() })
    }

    fn basis(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_features, l, |i, k| self.loadings[k][i])
    }

    /// Scores `T = X P_l`, one row per sample.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        shape(self.n_features, x.ncols())?;
        Ok(x * self.basis(self.retained_count))
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        shape(self.n_features, row.len())?;
        Ok(self.loadings[..self.retained_count]
            .iter()
            .map(|p| p.iter().zip(row).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Map scores back to the normalized feature space.
    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        shape(self.retained_count, scores.ncols())?;
        Ok(scores * self.basis(self.retained_count).transpose())
    }

    /// `(X_hat, E)` with `X = X_hat + E`.
    pub fn residual(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.split_at(x, self.retained_count)
    }

    /// Decomposition with an arbitrary number of leading components, including
    /// the degenerate `l = 0` (everything is residual).
    pub fn split_at(&self, x: &DMatrix<f64>, l: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        shape(self.n_features, x.ncols())?;
        if l > self.loadings.len() {
            return Err(Error::Preprocess(format!("only {} components available", self.loadings.len())));
        }
        let p = self.basis(l);
        let x_hat = (x * &p) * p.transpose();
        let e = x - &x_hat;
        Ok((x_hat, e))
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.variance_fractions[self.retained_count..].iter().sum()
    }
}

/// Sign convention: the largest-magnitude entry is positive (first wins ties).
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
