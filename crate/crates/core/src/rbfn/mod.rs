//! Gaussian radial basis function network.
//!
//! Hidden unit `l` responds with `phi_l(x) = exp(-|x - mu_l|^2 / (2 sigma^2))`
//! and output `z` is `y_z(x) = w_z0 + sum_l w_zl phi_l(x)`. Centers are
//! picked greedily from the training inputs; output weights come from a
//! linear least-squares solve.

mod solve;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

pub use solve::{design_matrix, solve_output_weights};
pub use train::{train, StopReason, TraceStep, TrainingTrace};

/// Growth hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfnConfig {
    /// Training stops once the mean squared error reaches this.
    pub mse_goal: f64,
    /// Gaussian width. Used as `sigma` directly unless
    /// `half_response_spread` is set.
    pub spread: f64,
    pub max_neurons: usize,
    pub neurons_per_step: usize,
    /// Maximum number of growth steps.
    pub max_epochs: usize,
    /// Ridge penalty on the hidden-unit weights for the final solve.
    pub ridge: f64,
    /// Interpret `spread` as the distance where a unit's response drops to
    /// 0.5, i.e. `sigma = spread / sqrt(2 ln 2)`.
    pub half_response_spread: bool,
}

impl Default for RbfnConfig {
    fn default() -> Self {
        Self {
            mse_goal: 0.04,
            spread: 1.0,
            max_neurons: 400,
            neurons_per_step: 1,
            max_epochs: 300,
            ridge: 0.0,
            half_response_spread: false,
        }
    }
}

impl RbfnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mse_goal > 0.0) {
            return Err(Error::Config("mse_goal must be > 0".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::Config("spread must be > 0".into()));
        }
        if self.max_neurons == 0 || self.neurons_per_step == 0 || self.max_epochs == 0 {
            return Err(Error::Config("max_neurons, neurons_per_step and max_epochs must be >= 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config("ridge must be >= 0".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        if self.half_response_spread {
            self.spread / (2.0 * std::f64::consts::LN_2).sqrt()
        } else {
            self.spread
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfnModel {
    pub input_dim: usize,
    pub output_dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub width: f64,
    /// `(hidden_count + 1) x output_dim`, row 0 is the bias.
    pub weights: Vec<Vec<f64>>,
}

#[inline]
pub(crate) fn gaussian(sq_dist: f64, width: f64) -> f64 {
    (-sq_dist / (2.0 * width * width)).exp()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl RbfnModel {
    pub fn new(centers: Vec<Vec<f64>>, width: f64, weights: Vec<Vec<f64>>) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Config("width must be > 0".into()));
        }
        let input_dim = centers.first().map_or(0, Vec::len);
        if centers.iter().any(|c| c.len() != input_dim) {
            return Err(Error::Config("centers have inconsistent dimensions".into()));
        }
        shape(centers.len() + 1, weights.len())?;
        let output_dim = weights[0].len();
        if weights.iter().any(|w| w.len() != output_dim) {
            return Err(Error::Config("weight rows have inconsistent lengths".into()));
        }
        Ok(Self { input_dim, output_dim, centers, width, weights })
    }

    pub fn hidden_count(&self) -> usize {
        self.centers.len()
    }

    /// Hidden-layer activations.
    pub fn basis(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.centers.is_empty() {
            shape(self.input_dim, x.len())?;
        }
        Ok(self.centers.iter().map(|c| gaussian(sq_dist(x, c), self.width)).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let phi = self.basis(x)?;
        let mut y = self.weights[0].clone();
        for (p, w) in phi.iter().zip(&self.weights[1..]) {
            for (yz, wz) in y.iter_mut().zip(w) {
                *yz += p * wz;
            }
        }
        Ok(y)
    }
}
