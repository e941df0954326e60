//! Performance measures: MSE, regression coefficient, per-case RMS error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub samples: usize,
    /// Mean squared error on min-max scaled targets.
    pub mse: f64,
    /// Mean squared error in label units.
    pub mse_raw: f64,
    /// Correlation of predictions with targets, both outputs pooled (scaled).
    pub regression_r: f64,
    pub regression_r_size: f64,
    pub regression_r_location: f64,
}

/// One row of the unlabelled-case table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub frames: usize,
    pub target: [f64; 2],
    pub output_avg: [f64; 2],
    pub rms_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub splits: BTreeMap<String, SplitMetrics>,
    pub cases: Vec<CaseReport>,
}

/// Sample correlation; 0 when either side has no variance.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// RMS over the outputs of `output - target`.
///
/// For an averaged output of (40.0, 0.99) against a target of (40.0, 1.00)
/// this gives `sqrt((0 + 0.01^2) / 2) ~= 0.0071`.
pub fn case_rms(output: &[f64], target: &[f64]) -> f64 {
    let n = output.len().min(target.len());
    if n == 0 {
        return 0.0;
    }
    (output.iter().zip(target).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / n as f64).sqrt()
}

pub fn mse(pred: &[Vec<f64>], target: &[Vec<f64>]) -> f64 {
    let count: usize = pred.iter().map(Vec::len).sum();
    if count == 0 {
        return 0.0;
    }
    pred.iter()
        .zip(target)
        .flat_map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b).powi(2)))
        .sum::<f64>()
        / count as f64
}

/// Split metrics from raw and scaled predictions/targets.
pub fn split_metrics(
    pred_scaled: &[Vec<f64>],
    target_scaled: &[Vec<f64>],
    pred_raw: &[Vec<f64>],
    target_raw: &[Vec<f64>],
) -> Result<SplitMetrics> {
    if pred_scaled.is_empty() {
        return Err(Error::Evaluation("no samples to evaluate".into()));
    }
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let pooled_p: Vec<f64> = pred_scaled.iter().flatten().copied().collect();
    let pooled_t: Vec<f64> = target_scaled.iter().flatten().copied().collect();
    Ok(SplitMetrics {
        samples: pred_scaled.len(),
        mse: mse(pred_scaled, target_scaled),
        mse_raw: mse(pred_raw, target_raw),
        regression_r: correlation(&pooled_p, &pooled_t),
        regression_r_size: correlation(&column(pred_scaled, 0), &column(target_scaled, 0)),
        regression_r_location: correlation(&column(pred_scaled, 1), &column(target_scaled, 1)),
    })
}

/// Window-averaged output and RMS error for one case.
pub fn case_report(case: impl Into<String>, outputs_raw: &[Vec<f64>], target: [f64; 2]) -> Result<CaseReport> {
    if outputs_raw.is_empty() {
        return Err(Error::Evaluation("case has no frames".into()));
    }
    let n = outputs_raw.len() as f64;
    let mut avg = [0.0; 2];
    for o in outputs_raw {
        avg[0] += o[0] / n;
        avg[1] += o[1] / n;
    }
    Ok(CaseReport {
        case: case.into(),
        frames: outputs_raw.len(),
        target,
        output_avg: avg,
        rms_error: case_rms(&avg, &target),
    })
}

impl Metrics {
    /// Plain-text table: fault, target, averaged output, RMS error.
    pub fn case_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>16} {:>20} {:>10}", "Fault", "Target output", "Output (avg)", "RMS error");
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{:<28} {:>7.2} {:>8.2} {:>9.2} {:>10.2} {:>10.3}",
                c.case, c.target[0], c.target[1], c.output_avg[0], c.output_avg[1], c.rms_error
            );
        }
        s
    }

    pub fn split_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>8} {:>10} {:>12} {:>8}", "split", "samples", "mse", "mse (raw)", "R");
        for (name, m) in &self.splits {
            let _ = writeln!(s, "{:<8} {:>8} {:>10.5} {:>12.4} {:>8.4}", name, m.samples, m.mse, m.mse_raw, m.regression_r);
        }
        s
    }
}
