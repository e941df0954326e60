//! Greedy center growth with an incrementally orthogonalized design matrix.
//!
//! The design columns `[1, phi_1, ..., phi_k]` are kept as `Q R` with
//! orthonormal `Q`. Adding a center costs one Gram-Schmidt pass against the
//! existing columns, and the least-squares residual is updated in place,
//! so every step is `O(m k)` instead of a fresh solve.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{gaussian, sq_dist, RbfnConfig, RbfnModel};
use crate::error::{shape, Error, Result};

/// A candidate column whose orthogonal part is below this fraction of its
/// norm is treated as linearly dependent and skipped.
const DEPENDENCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GoalMet,
    /// Also reported when every distinct training input is already a center.
    MaxNeurons,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub hidden_count: usize,
    pub training_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// First entry is the bias-only fit.
    pub steps: Vec<TraceStep>,
    pub epochs: usize,
    pub wall_time_s: f64,
    pub stop_reason: StopReason,
}

impl TrainingTrace {
    pub fn final_mse(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.training_mse)
    }

    pub fn hidden_count(&self) -> usize {
        self.steps.last().map_or(0, |s| s.hidden_count)
    }
}

struct Growth<'a> {
    inputs: &'a [Vec<f64>],
    width: f64,
    /// Orthonormal columns of the design matrix.
    q: Vec<Vec<f64>>,
    /// Column `j` of the upper-triangular factor, length `j + 1`.
    r: Vec<Vec<f64>>,
    /// `q_j^T T`, one row per column.
    qt: Vec<Vec<f64>>,
    /// Current residual `T - Q Q^T T`, row-major `m x z`.
    residual: Vec<Vec<f64>>,
    sq_norm: f64,
    centers: Vec<usize>,
}

impl<'a> Growth<'a> {
    fn new(inputs: &'a [Vec<f64>], targets: &[Vec<f64>], width: f64) -> Self {
        let m = inputs.len();
        let z = targets[0].len();
        let q0 = vec![1.0 / (m as f64).sqrt(); m];
        let mut g = vec![0.0; z];
        for (p, t) in targets.iter().enumerate() {
            for j in 0..z {
                g[j] += q0[p] * t[j];
            }
        }
        let residual: Vec<Vec<f64>> = targets
            .iter()
            .enumerate()
            .map(|(p, t)| t.iter().zip(&g).map(|(tj, gj)| tj - q0[p] * gj).collect())
            .collect();
        let sq_norm = residual.iter().flatten().map(|v| v * v).sum();
        Self {
            inputs,
            width,
            q: vec![q0],
            r: vec![vec![(m as f64).sqrt()]],
            qt: vec![g],
            residual,
            sq_norm,
            centers: Vec::new(),
        }
    }

    fn mse(&self) -> f64 {
        self.sq_norm / (self.residual.len() * self.residual[0].len()) as f64
    }

    fn sample_errors(&self) -> Vec<f64> {
        self.residual.iter().map(|r| r.iter().map(|v| v * v).sum()).collect()
    }

    /// Try to add training input `p` as a center. Returns false when its
    /// column is numerically in the span of the current design.
    fn add(&mut self, p: usize) -> bool {
        let center = &self.inputs[p];
        let a: Vec<f64> = self.inputs.iter().map(|x| gaussian(sq_dist(x, center), self.width)).collect();
        let a_norm = norm(&a);
        let mut v = a;
        let mut coeffs = vec![0.0; self.q.len()];
        // Two Gram-Schmidt passes keep Q orthonormal to working precision.
        for _ in 0..2 {
            for (j, qj) in self.q.iter().enumerate() {
                let c = dot(qj, &v);
                axpy(-c, qj, &mut v);
                coeffs[j] += c;
            }
        }
        let v_norm = norm(&v);
        if v_norm <= DEPENDENCE_TOLERANCE * a_norm {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= v_norm);
        coeffs.push(v_norm);

        let z = self.residual[0].len();
        let mut g = vec![0.0; z];
        for (vp, rp) in v.iter().zip(&self.residual) {
            for j in 0..z {
                g[j] += vp * rp[j];
            }
        }
        for (vp, rp) in v.iter().zip(self.residual.iter_mut()) {
            for j in 0..z {
                rp[j] -= vp * g[j];
            }
        }
        // Exact downdate of the residual norm: monotone by construction.
        self.sq_norm = (self.sq_norm - g.iter().map(|x| x * x).sum::<f64>()).max(0.0);

        self.q.push(v);
        self.r.push(coeffs);
        self.qt.push(g);
        self.centers.push(p);
        true
    }

    /// Back-substitute `R W = Q^T T`.
    fn weights(&self) -> Vec<Vec<f64>> {
        let n = self.r.len();
        let z = self.qt[0].len();
        let mut w = vec![vec![0.0; z]; n];
        for j in (0..n).rev() {
            for c in 0..z {
                let mut acc = self.qt[j][c];
                for i in (j + 1)..n {
                    acc -= self.r[i][j] * w[i][c];
                }
                w[j][c] = acc / self.r[j][j];
            }
        }
        w
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Grow a network until the training MSE reaches `cfg.mse_goal`.
///
/// Each step adds the `neurons_per_step` training inputs with the largest
/// current squared error (lowest index wins ties), skipping inputs that
/// duplicate an existing center or whose basis column adds nothing new.
pub fn train(inputs: &[Vec<f64>], targets: &[Vec<f64>], cfg: &RbfnConfig) -> Result<(RbfnModel, TrainingTrace)> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    shape(inputs.len(), targets.len())?;
    let d = inputs[0].len();
    if inputs.iter().any(|x| x.len() != d) {
        return Err(Error::Training("inputs have inconsistent dimensions".into()));
    }
    let z = targets[0].len();
    if z == 0 || targets.iter().any(|t| t.len() != z) {
        return Err(Error::Training("targets must share a non-zero width".into()));
    }
    if inputs.iter().flatten().chain(targets.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite training data".into()));
    }

    let started = Instant::now();
    let m = inputs.len();
    let mut growth = Growth::new(inputs, targets, cfg.width());
    let mut steps = vec![TraceStep { hidden_count: 0, training_mse: growth.mse() }];
    let mut used = vec![false; m];
    let mut center_keys: HashSet<Vec<u64>> = HashSet::new();
    let mut epochs = 0;

    let stop_reason = loop {
        if growth.mse() <= cfg.mse_goal {
            break StopReason::GoalMet;
        }
        if growth.centers.len() >= cfg.max_neurons {
            break StopReason::MaxNeurons;
        }
        if epochs >= cfg.max_epochs {
            break StopReason::MaxEpochs;
        }
        epochs += 1;

        let errors = growth.sample_errors();
        let budget = cfg.neurons_per_step.min(cfg.max_neurons - growth.centers.len());
        let mut added = 0;
        while added < budget {
            let Some(best) = (0..m)
                .filter(|&p| !used[p])
                .fold(None, |best: Option<usize>, p| match best {
                    Some(b) if errors[b] >= errors[p] => Some(b),
                    _ => Some(p),
                })
            else {
                break;
            };
            used[best] = true;
            if !center_keys.insert(key(&inputs[best])) {
                continue;
            }
            if growth.add(best) {
                added += 1;
            }
        }
        if added == 0 {
            tracing::debug!("no usable candidate left after {} centers", growth.centers.len());
            break StopReason::MaxNeurons;
        }
        steps.push(TraceStep { hidden_count: growth.centers.len(), training_mse: growth.mse() });
    };

    let centers: Vec<Vec<f64>> = growth.centers.iter().map(|&p| inputs[p].clone()).collect();
    let weights = if cfg.ridge > 0.0 {
        super::solve_output_weights(&centers, cfg.width(), inputs, targets, cfg.ridge)?
    } else {
        growth.weights()
    };
    let model = RbfnModel::new(centers, cfg.width(), weights)?;
    let trace = TrainingTrace { steps, epochs, wall_time_s: started.elapsed().as_secs_f64(), stop_reason };
    Ok((model, trace))
}
