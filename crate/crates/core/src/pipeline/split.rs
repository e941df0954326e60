//! Train / validation / test partitioning.
//!
//! Rounding rule for a frame-level split of `n` rows with fractions
//! `(a, b, c)`: train gets `ceil(a n)`, validation gets `round(b n)` of what
//! is left, test takes the rest; validation and test are then topped up to
//! at least one row each (taken from train) when their fraction is
//! non-zero. For 5446 rows this gives 3813 / 817 / 816, for 10 rows
//! 7 / 2 / 1.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plantsim::LabeledDataset;

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);

/// Row indices of each split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// The training partition. Only the split functions can build one, which is
/// what keeps the target scaler from being fitted on held-out data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSplit(LabeledDataset);

impl TrainSplit {
    pub fn data(&self) -> &LabeledDataset {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplits {
    pub train: TrainSplit,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn split_counts(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("fractions {fractions:?} must be in [0, 1] and sum to 1")));
    }
    if n < 3 {
        return Err(Error::Split(format!("need at least 3 rows, got {n}")));
    }
    let nf = n as f64;
    let mut train = ((a * nf) - 1e-9).ceil().max(0.0) as usize;
    train = train.min(n);
    let mut val = ((b * nf).round() as usize).min(n - train);
    let mut test = n - train - val;
    for (count, frac) in [(&mut val, b), (&mut test, c)] {
        if frac > 0.0 && *count == 0 && train > 1 {
            *count = 1;
            train -= 1;
        }
    }
    if c == 0.0 && test > 0 {
        val += test;
        test = 0;
    }
    Ok((train, val, test))
}

/// Seeded shuffle of `0..n` cut into train / val / test.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (nt, nv, _) = split_counts(n, fractions)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(nt + nv);
    let val = idx.split_off(nt);
    Ok(SplitIndices { train: idx, val, test })
}

/// Frame-level random split.
pub fn split_dataset(ds: &LabeledDataset, fractions: (f64, f64, f64), seed: u64) -> Result<DatasetSplits> {
    let s = split_indices(ds.len(), fractions, seed)?;
    Ok(DatasetSplits { train: TrainSplit(ds.subset(&s.train)), val: ds.subset(&s.val), test: ds.subset(&s.test) })
}

/// Whole runs held out: every frame of a case listed in `val_cases` /
/// `test_cases` goes to that split, the rest trains.
pub fn split_by_case(ds: &LabeledDataset, val_cases: &[usize], test_cases: &[usize]) -> Result<DatasetSplits> {
    if let Some(c) = val_cases.iter().chain(test_cases).find(|&&c| c >= ds.cases.len()) {
        return Err(Error::Split(format!("no case {c}")));
    }
    if val_cases.iter().any(|c| test_cases.contains(c)) {
        return Err(Error::Split("a case cannot be in both validation and test".into()));
    }
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (row, c) in ds.case_of.iter().enumerate() {
        if val_cases.contains(c) {
            val.push(row);
        } else if test_cases.contains(c) {
            test.push(row);
        } else {
            train.push(row);
        }
    }
    if train.is_empty() {
        return Err(Error::Split("no training rows left".into()));
    }
    Ok(DatasetSplits { train: TrainSplit(ds.subset(&train)), val: ds.subset(&val), test: ds.subset(&test) })
}
