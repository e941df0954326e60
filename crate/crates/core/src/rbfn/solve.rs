use nalgebra::DMatrix;

use super::{gaussian, sq_dist};
use crate::error::{shape, Error, Result};

/// `[1, phi_1(x), ..., phi_k(x)]` for every input row.
pub fn design_matrix(centers: &[Vec<f64>], width: f64, inputs: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(inputs.len(), centers.len() + 1, |p, l| {
        if l == 0 {
            1.0
        } else {
            gaussian(sq_dist(&inputs[p], &centers[l - 1]), width)
        }
    })
}

/// Least-squares output weights, `(k + 1) x Z` with the bias in row 0.
///
/// Solved through an SVD, so a rank-deficient design yields the
/// minimum-norm solution. A positive `ridge` penalizes the hidden-unit
/// weights (not the bias).
pub fn solve_output_weights(
    centers: &[Vec<f64>],
    width: f64,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    ridge: f64,
) -> Result<Vec<Vec<f64>>> {
    if inputs.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    shape(inputs.len(), targets.len())?;
    let z = targets[0].len();
    if z == 0 || targets.iter().any(|t| t.len() != z) {
        return Err(Error::Training("targets must share a non-zero width".into()));
    }
    let k = centers.len();
    let mut h = design_matrix(centers, width, inputs);
    let mut t = DMatrix::from_fn(inputs.len(), z, |p, j| targets[p][j]);
    if ridge > 0.0 && k > 0 {
        let m = h.nrows();
        h = h.resize_vertically(m + k, 0.0);
        t = t.resize_vertically(m + k, 0.0);
        for l in 0..k {
            h[(m + l, l + 1)] = ridge.sqrt();
        }
    }
    let svd = h.svd(true, true);
    let eps = f64::EPSILON * (svd.singular_values.max() * svd.singular_values.len().max(t.nrows()) as f64);
    let w = svd.solve(&t, eps).map_err(|e| Error::Training(e.to_string()))?;
    Ok(w.row_iter().map(|r| r.iter().copied().collect()).collect())
}
