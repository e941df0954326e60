//! The composite diagnoser: normalizer, PCA, target scaler and network.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::{decode_output, FaultLabel};
use super::metrics::{case_report, split_metrics, Metrics};
use super::scaler::TargetScaler;
use super::split::{split_dataset, DatasetSplits, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::plantsim::{LabeledDataset, TelemetryFrame};
use crate::preprocess::{matrix_from_rows, Normalizer, PcaModel, DEFAULT_CUTOFF};
use crate::rbfn::{self, RbfnConfig, RbfnModel, TrainingTrace};

/// Model file format version written by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Label domains used when an output never varies in the training split.
const OUTPUT_DOMAIN: [(f64, f64); 2] = [(0.0, 100.0), (0.0, 3.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoserConfig {
    pub rbfn: RbfnConfig,
    pub pca_cutoff: f64,
    pub fractions: (f64, f64, f64),
    pub split_seed: u64,
}

impl Default for DiagnoserConfig {
    fn default() -> Self {
        Self { rbfn: RbfnConfig::default(), pca_cutoff: DEFAULT_CUTOFF, fractions: DEFAULT_FRACTIONS, split_seed: 0 }
    }
}

/// Everything needed to turn raw telemetry into a diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisModel {
    pub schema_version: u32,
    pub channel_order: Vec<String>,
    pub normalizer: Normalizer,
    pub pca: PcaModel,
    pub target_scaler: TargetScaler,
    pub network: RbfnModel,
    pub metrics: Metrics,
    pub training: TrainingTrace,
}

/// Result of diagnosing a window of frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultDiagnosis {
    pub predicted_size: f64,
    pub predicted_location: u8,
    /// Network output in label units, averaged over the window.
    pub raw_output: [f64; 2],
    pub window_frames: usize,
}

impl FaultDiagnosis {
    pub fn label(&self) -> FaultLabel {
        FaultLabel { size_percent: self.predicted_size, location_code: self.predicted_location }
    }
}

impl DiagnosisModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            schema_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.schema_version > SCHEMA_VERSION {
            return Err(Error::Version { found: header.schema_version, supported: SCHEMA_VERSION });
        }
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if self.normalizer.n_features != self.channel_order.len() {
            return Err(Error::Shape { expected: self.channel_order.len(), got: self.normalizer.n_features });
        }
        if self.pca.n_features != self.normalizer.output_dim() {
            return Err(Error::Shape { expected: self.normalizer.output_dim(), got: self.pca.n_features });
        }
        if self.network.input_dim != self.pca.retained_count {
            return Err(Error::Shape { expected: self.pca.retained_count, got: self.network.input_dim });
        }
        if self.network.output_dim != 2 {
            return Err(Error::Shape { expected: 2, got: self.network.output_dim });
        }
        Ok(())
    }

    /// Fails unless `channels` matches the training channel order exactly.
    pub fn check_channels(&self, channels: &[String]) -> Result<()> {
        if channels == self.channel_order.as_slice() {
            return Ok(());
        }
        if channels.len() != self.channel_order.len() {
            return Err(Error::Diagnosis(format!(
                "expected {} channels, got {}",
                self.channel_order.len(),
                channels.len()
            )));
        }
        let bad: Vec<String> = channels
            .iter()
            .zip(&self.channel_order)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, (a, b))| format!("column {i}: expected {b}, got {a}"))
            .collect();
        Err(Error::Diagnosis(format!("channel order mismatch: {}", bad.join("; "))))
    }

    /// Network output for one frame, in scaled target units.
    pub fn predict_scaled(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.channel_order.len() {
            return Err(Error::Diagnosis(format!(
                "frame has {} values, model expects {}",
                row.len(),
                self.channel_order.len()
            )));
        }
        let z = self.normalizer.apply_row(row)?;
        let scores = self.pca.transform_row(&z)?;
        self.network.predict(&scores)
    }

    /// Network output for one frame, in label units.
    pub fn predict_raw(&self, row: &[f64]) -> Result<[f64; 2]> {
        let raw = self.target_scaler.invert(&self.predict_scaled(row)?)?;
        Ok([raw[0], raw[1]])
    }

    /// Average the raw outputs over the window, then decode.
    pub fn diagnose_rows(&self, rows: &[Vec<f64>]) -> Result<FaultDiagnosis> {
        if rows.is_empty() {
            return Err(Error::Diagnosis("empty window".into()));
        }
        let mut avg = [0.0; 2];
        for row in rows {
            let out = self.predict_raw(row)?;
            avg[0] += out[0];
            avg[1] += out[1];
        }
        let n = rows.len() as f64;
        avg = [avg[0] / n, avg[1] / n];
        let decoded = decode_output(avg)?;
        Ok(FaultDiagnosis {
            predicted_size: decoded.size_percent,
            predicted_location: decoded.location_code,
            raw_output: avg,
            window_frames: rows.len(),
        })
    }
}

/// Diagnose a window of telemetry frames in the model's channel order.
pub fn diagnose(model: &DiagnosisModel, frames: &[TelemetryFrame]) -> Result<FaultDiagnosis> {
    let rows: Vec<Vec<f64>> = frames.iter().map(|f| f.values.clone()).collect();
    model.diagnose_rows(&rows)
}

/// Split the corpus at the frame level and train on it.
pub fn train_diagnoser(corpus: &LabeledDataset, cfg: &DiagnoserConfig) -> Result<DiagnosisModel> {
    if corpus.is_empty() {
        return Err(Error::Training("empty corpus".into()));
    }
    let splits = split_dataset(corpus, cfg.fractions, cfg.split_seed)?;
    train_on_splits(&splits, cfg)
}

/// Train on a prepared split. Normalizer, PCA and target scaler see only
/// the training partition.
pub fn train_on_splits(splits: &DatasetSplits, cfg: &DiagnoserConfig) -> Result<DiagnosisModel> {
    cfg.rbfn.validate()?;
    let train = splits.train.data();
    if train.is_empty() {
        return Err(Error::Training("empty training split".into()));
    }
    let x = matrix_from_rows(&train.features);
    let normalizer = Normalizer::fit(&x)?;
    let z = normalizer.apply(&x)?;
    let pca = PcaModel::fit(&z, cfg.pca_cutoff)?;
    let scores = pca.transform(&z)?;
    let inputs: Vec<Vec<f64>> = scores.row_iter().map(|r| r.iter().copied().collect()).collect();

    let target_scaler = TargetScaler::fit_or_domain(&splits.train, &OUTPUT_DOMAIN)?;
    let targets = train
        .labels
        .iter()
        .map(|l| target_scaler.apply(&l.as_output()))
        .collect::<Result<Vec<_>>>()?;

    let (network, training) = rbfn::train(&inputs, &targets, &cfg.rbfn)?;
    tracing::info!(
        hidden = network.hidden_count(),
        mse = training.final_mse(),
        stop = ?training.stop_reason,
        "trained network"
    );

    let mut model = DiagnosisModel {
        schema_version: SCHEMA_VERSION,
        channel_order: train.channels.clone(),
        normalizer,
        pca,
        target_scaler,
        network,
        metrics: Metrics::default(),
        training,
    };
    let mut metrics = Metrics::default();
    for (name, ds) in [("train", train), ("val", &splits.val), ("test", &splits.test)] {
        if !ds.is_empty() {
            let m = evaluate(&model, ds)?;
            metrics.splits.insert(name.to_string(), m.splits["all"].clone());
            // Per-case reports come from the held-out frames.
            if name == "test" || metrics.cases.is_empty() {
                metrics.cases = m.cases;
            }
        }
    }
    model.metrics = metrics;
    Ok(model)
}

/// Metrics over a labelled set: one split entry named `all` plus one
/// window-averaged report per case.
pub fn evaluate(model: &DiagnosisModel, ds: &LabeledDataset) -> Result<Metrics> {
    if ds.is_empty() {
        return Err(Error::Evaluation("empty evaluation set".into()));
    }
    model.check_channels(&ds.channels).map_err(|e| Error::Evaluation(e.to_string()))?;
    let mut pred_s = Vec::with_capacity(ds.len());
    let mut pred_r = Vec::with_capacity(ds.len());
    let mut targ_s = Vec::with_capacity(ds.len());
    let mut targ_r = Vec::with_capacity(ds.len());
    for (row, label) in ds.features.iter().zip(&ds.labels) {
        let s = model.predict_scaled(row)?;
        pred_r.push(model.target_scaler.invert(&s)?);
        pred_s.push(s);
        targ_s.push(model.target_scaler.apply(&label.as_output())?);
        targ_r.push(label.as_output().to_vec());
    }
    let mut metrics = Metrics::default();
    metrics.splits.insert("all".into(), split_metrics(&pred_s, &targ_s, &pred_r, &targ_r)?);
    for (case, rows) in ds.by_case() {
        let outputs: Vec<Vec<f64>> = rows.iter().map(|&i| pred_r[i].clone()).collect();
        metrics.cases.push(case_report(case, &outputs, ds.labels[rows[0]].as_output())?);
    }
    Ok(metrics)
}
