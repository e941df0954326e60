use serde::{Deserialize, Serialize};

use super::split::TrainSplit;
use crate::error::{shape, Error, Result};

/// Min-max scaling of the two target outputs to [0, 1], memorized from the
/// training split. Values outside the training range map outside [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl TargetScaler {
    pub fn fit(train: &TrainSplit) -> Result<Self> {
        let rows: Vec<Vec<f64>> = train.data().labels.iter().map(|l| l.as_output().to_vec()).collect();
        Self::fit_rows(&rows)
    }

    /// Like [`fit`](Self::fit), but an output that is constant in the
    /// training split falls back to its full label domain `(lo, hi)`
    /// instead of failing.
    pub fn fit_or_domain(train: &TrainSplit, domain: &[(f64, f64)]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = train.data().labels.iter().map(|l| l.as_output().to_vec()).collect();
        shape(domain.len(), rows.first().map_or(0, Vec::len))?;
        let mut padded = rows;
        for (j, &(lo, hi)) in domain.iter().enumerate() {
            let constant = padded.iter().all(|r| r[j] == padded[0][j]);
            if constant {
                let mut a = padded[0].clone();
                let mut b = padded[0].clone();
                a[j] = lo;
                b[j] = hi;
                padded.push(a);
                padded.push(b);
            }
        }
        Self::fit_rows(&padded)
    }

    pub(crate) fn fit_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Scaling("no training targets".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            shape(min.len(), r.len())?;
            for (j, v) in r.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        if let Some(j) = (0..min.len()).find(|&j| max[j] <= min[j]) {
            return Err(Error::Scaling(format!("output {j} is constant ({}) in the training split", min[j])));
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        shape(self.min.len(), raw.len())?;
        Ok(raw.iter().enumerate().map(|(j, v)| (v - self.min[j]) / (self.max[j] - self.min[j])).collect())
    }

    pub fn invert(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        shape(self.min.len(), scaled.len())?;
        Ok(scaled.iter().enumerate().map(|(j, v)| self.min[j] + v * (self.max[j] - self.min[j])).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaler() -> TargetScaler {
        TargetScaler::fit_rows(&[vec![0.0, 0.0], vec![100.0, 3.0], vec![45.0, 1.0]]).unwrap()
    }

    #[test]
    fn linear_map() {
        let s = scaler();
        let y = s.apply(&[45.0, 2.0]).unwrap();
        assert!((y[0] - 0.45).abs() < 1e-15);
        assert!((y[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_is_not_clamped() {
        let y = scaler().apply(&[110.0, 0.0]).unwrap();
        assert!((y[0] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn invert_roundtrip() {
        let s = scaler();
        for raw in [[12.5, 0.3], [99.0, 2.9], [-4.0, 3.5]] {
            let back = s.invert(&s.apply(&raw).unwrap()).unwrap();
            assert!((back[0] - raw[0]).abs() < 1e-12 && (back[1] - raw[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_output_is_rejected() {
        assert!(matches!(
            TargetScaler::fit_rows(&[vec![0.0, 1.0], vec![5.0, 1.0]]),
            Err(Error::Scaling(_))
        ));
    }
}
