//! Scenario runs, corpus assembly, and the corpus CSV format.
//!
//! CSV layout: `time`, the 43 channel labels in [`CHANNELS`] order,
//! `label_size`, `label_loc`; one row per frame. Numbers are written in
//! Rust's shortest round-trip form, so a seeded run is byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    channel_labels, FaultKind, PlantConfig, ScenarioSpec, Simulator, TelemetryFrame,
    TransientRecord, CHANNEL_COUNT,
};
use crate::error::{Error, Result};
use crate::pipeline::{encode_label, FaultLabel};

/// Frames from one or more scenarios, with per-frame labels.
///
/// `case_of[i]` indexes `cases`, which names the run each frame came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub channels: Vec<String>,
    pub times: Vec<f64>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<FaultLabel>,
    pub case_of: Vec<usize>,
    pub cases: Vec<String>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Rows selected by index, keeping case bookkeeping.
    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            channels: self.channels.clone(),
            times: rows.iter().map(|&i| self.times[i]).collect(),
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            case_of: rows.iter().map(|&i| self.case_of[i]).collect(),
            cases: self.cases.clone(),
        }
    }

    /// Frames grouped by case, in case order. Empty cases are skipped.
    pub fn by_case(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.cases.len()];
        for (row, &c) in self.case_of.iter().enumerate() {
            groups[c].push(row);
        }
        self.cases
            .iter()
            .cloned()
            .zip(groups)
            .filter(|(_, rows)| !rows.is_empty())
            .collect()
    }

    fn push_record(&mut self, record: &TransientRecord) {
        let case = self.cases.len();
        self.cases.push(record.scenario.case_name());
        for frame in &record.frames {
            self.times.push(frame.time);
            self.features.push(frame.values.clone());
            self.labels.push(record.label);
            self.case_of.push(case);
        }
    }

    fn empty() -> Self {
        LabeledDataset {
            channels: channel_labels().into_iter().map(String::from).collect(),
            times: Vec::new(),
            features: Vec::new(),
            labels: Vec::new(),
            case_of: Vec::new(),
            cases: Vec::new(),
        }
    }

    pub fn from_records(records: &[TransientRecord]) -> Self {
        let mut ds = Self::empty();
        for r in records {
            ds.push_record(r);
        }
        ds
    }
}

/// Run one scenario from steady state. Frame `k` is stamped `k * dt`.
pub fn run_scenario(scenario: &ScenarioSpec, config: &PlantConfig) -> Result<TransientRecord> {
    let label = encode_label(scenario.fault_kind, scenario.severity_percent)?;
    let mut sim = Simulator::new(scenario.clone(), config.clone())?;
    let mut frames = Vec::with_capacity(scenario.duration_steps);
    frames.push(sim.frame());
    while frames.len() < scenario.duration_steps {
        frames.push(sim.step());
    }
    Ok(TransientRecord { scenario: scenario.clone(), frames, label })
}

pub fn generate_corpus(scenarios: &[ScenarioSpec], config: &PlantConfig) -> Result<LabeledDataset> {
    let first = scenarios
        .first()
        .ok_or_else(|| Error::Corpus("at least one scenario is required".into()))?;
    if let Some(bad) = scenarios.iter().find(|s| s.dt != first.dt) {
        return Err(Error::Corpus(format!(
            "mismatched dt: {} vs {} in scenario {}",
            bad.dt,
            first.dt,
            bad.case_name()
        )));
    }
    let mut ds = LabeledDataset::empty();
    for s in scenarios {
        ds.push_record(&run_scenario(s, config)?);
    }
    Ok(ds)
}

/// The six standard training runs: normal operation,
/// SG-A ruptures of 15% and 45%, SG-B ruptures of 30% and 60% (the latter
/// with ECCS), and a fully locked rotor on pump #1.
///
/// `total_frames` is spread as evenly as possible over the six runs; seeds
/// are `seed, seed + 1, ...`.
pub fn reference_scenarios(total_frames: usize, noise_sigma: f64, seed: u64) -> Vec<ScenarioSpec> {
    let cases = [
        (FaultKind::Normal, 0.0, false),
        (FaultKind::SgtrA, 15.0, false),
        (FaultKind::SgtrB, 30.0, false),
        (FaultKind::SgtrA, 45.0, false),
        (FaultKind::SgtrB, 60.0, true),
        (FaultKind::LockedRotorPump1, 100.0, false),
    ];
    let n = cases.len();
    cases
        .iter()
        .enumerate()
        .map(|(i, &(kind, severity, eccs))| {
            let steps = total_frames / n + usize::from(i < total_frames % n);
            ScenarioSpec::new(kind, severity)
                .with_steps(steps.max(1))
                .with_noise(noise_sigma)
                .with_seed(seed + i as u64)
                .with_eccs(eccs)
        })
        .collect()
}

pub fn write_corpus_csv<W: Write>(ds: &LabeledDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend(ds.channels.iter().cloned());
    header.push("label_size".into());
    header.push("label_loc".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        row.clear();
        row.push(ds.times[i].to_string());
        row.extend(ds.features[i].iter().map(f64::to_string));
        row.push(ds.labels[i].size_percent.to_string());
        row.push(ds.labels[i].location_code.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Telemetry read from CSV, labelled or not.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTelemetry {
    pub channels: Vec<String>,
    pub frames: Vec<TelemetryFrame>,
    pub labels: Option<Vec<FaultLabel>>,
}

/// Read a corpus or telemetry CSV. Label columns are optional.
pub fn read_telemetry_csv<R: Read>(input: R) -> Result<CsvTelemetry> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err(Error::Corpus("first column must be `time`".into()));
    }
    let labelled = header.len() >= 3
        && header[header.len() - 2] == "label_size"
        && header[header.len() - 1] == "label_loc";
    let channel_end = if labelled { header.len() - 2 } else { header.len() };
    let channels = header[1..channel_end].to_vec();
    if channels.is_empty() {
        return Err(Error::Corpus("no channel columns".into()));
    }

    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Corpus(format!("row {}: {e}", line + 1)))?;
        if nums.len() != header.len() {
            return Err(Error::Corpus(format!(
                "row {}: expected {} fields, got {}",
                line + 1,
                header.len(),
                nums.len()
            )));
        }
        frames.push(TelemetryFrame { time: nums[0], values: nums[1..channel_end].to_vec() });
        if labelled {
            let code = nums[channel_end + 1];
            if code.fract() != 0.0 || !(0.0..=3.0).contains(&code) {
                return Err(Error::Corpus(format!("row {}: bad location code {code}", line + 1)));
            }
            labels.push(FaultLabel { size_percent: nums[channel_end], location_code: code as u8 });
        }
    }
    Ok(CsvTelemetry { channels, frames, labels: labelled.then_some(labels) })
}

/// Read a labelled corpus CSV. Runs are split wherever time fails to
/// increase or the label changes.
pub fn read_corpus_csv<R: Read>(input: R) -> Result<LabeledDataset> {
    let tel = read_telemetry_csv(input)?;
    let labels = tel
        .labels
        .ok_or_else(|| Error::Corpus("corpus CSV needs label_size and label_loc columns".into()))?;
    if tel.frames.is_empty() {
        return Err(Error::Corpus("corpus CSV has no rows".into()));
    }
    if tel.channels.len() != CHANNEL_COUNT {
        tracing::warn!(channels = tel.channels.len(), "corpus channel count differs from the simulator");
    }
    let mut ds = LabeledDataset {
        channels: tel.channels,
        times: Vec::with_capacity(tel.frames.len()),
        features: Vec::with_capacity(tel.frames.len()),
        labels: Vec::with_capacity(tel.frames.len()),
        case_of: Vec::with_capacity(tel.frames.len()),
        cases: Vec::new(),
    };
    for (frame, label) in tel.frames.into_iter().zip(labels) {
        let new_case = match (ds.times.last(), ds.labels.last()) {
            (Some(&t), Some(&l)) => frame.time <= t || l != label,
            _ => true,
        };
        if new_case {
            ds.cases.push(format!("case {} ({label})", ds.cases.len()));
        }
        ds.times.push(frame.time);
        ds.features.push(frame.values);
        ds.labels.push(label);
        ds.case_of.push(ds.cases.len() - 1);
    }
    Ok(ds)
}
