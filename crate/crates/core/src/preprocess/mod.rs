//! Channel standardisation and principal component feature extraction.

mod normalize;
mod pca;

use nalgebra::DMatrix;

pub use normalize::Normalizer;
pub use pca::{PcaModel, DEFAULT_CUTOFF};

/// Row-per-sample matrix from a slice of rows. All rows must have the
/// length of the first.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}
