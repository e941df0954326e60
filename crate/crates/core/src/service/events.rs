//! Event log entries, stream messages and threshold alarms.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::pipeline::{location_name, FaultDiagnosis};
use crate::plantsim::{TelemetryFrame, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    FaultInjected,
    DiagnosisIssued,
    ThresholdAlarm,
    SessionControl,
}

/// One entry of a session's append-only log. `timestamp` is simulation
/// time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub timestamp: f64,
    pub kind: EventKind,
    pub payload: Value,
}

/// A diagnosis issued by a session, stamped with the simulation time of
/// the last frame in its window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub timestamp: f64,
    pub location_name: String,
    #[serde(flatten)]
    pub diagnosis: FaultDiagnosis,
}

impl DiagnosisReport {
    pub fn new(timestamp: f64, diagnosis: FaultDiagnosis) -> Self {
        Self { timestamp, location_name: location_name(diagnosis.predicted_location).to_string(), diagnosis }
    }
}

/// Wire format of stream messages: `{"type": "frame" | "diagnosis" | "event", "data": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "lowercase")]
pub enum StreamMessage {
    Frame(TelemetryFrame),
    Diagnosis(DiagnosisReport),
    Event(EventLogEntry),
}

impl StreamMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stream messages always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlarmConfig {
    /// Alarm when a channel is more than `k` sigma from its steady value.
    pub k: f64,
    /// Lower bound on sigma as a fraction of `max(|steady|, 1)`, so that
    /// noiseless runs and zero-valued channels still get a finite band.
    pub min_sigma_frac: f64,
    /// Consecutive out-of-band frames before the alarm is raised.
    pub persistence: usize,
}

impl Default for AlarmConfig {
    fn default() -> Self {
        Self { k: 4.0, min_sigma_frac: 1e-3, persistence: 3 }
    }
}

/// Per-channel deviation alarms against the steady state.
///
/// An alarm is raised once when a channel has been out of band for
/// `persistence` frames and cleared when it returns inside the band.
#[derive(Debug, Clone)]
pub struct ThresholdMonitor {
    steady: Vec<f64>,
    band: Vec<f64>,
    persistence: usize,
    run: Vec<usize>,
    raised: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAlarm {
    pub channel: String,
    pub value: f64,
    pub steady: f64,
    pub threshold: f64,
    /// `true` when the alarm is raised, `false` when it clears.
    pub raised: bool,
}

impl ThresholdMonitor {
    pub fn new(steady: &[f64], noise_sigma: f64, cfg: &AlarmConfig) -> Self {
        let band = steady
            .iter()
            .map(|s| {
                let sigma = (noise_sigma * s.abs()).max(cfg.min_sigma_frac * s.abs().max(1.0));
                cfg.k * sigma
            })
            .collect();
        Self {
            steady: steady.to_vec(),
            band,
            persistence: cfg.persistence.max(1),
            run: vec![0; steady.len()],
            raised: vec![false; steady.len()],
        }
    }

    pub fn band(&self) -> &[f64] {
        &self.band
    }

    /// Alarm transitions caused by this frame.
    pub fn observe(&mut self, values: &[f64]) -> Vec<ThresholdAlarm> {
        let mut out = Vec::new();
        for (i, &v) in values.iter().enumerate().take(self.steady.len()) {
            let outside = (v - self.steady[i]).abs() > self.band[i];
            self.run[i] = if outside { self.run[i] + 1 } else { 0 };
            let transition = if !self.raised[i] && self.run[i] >= self.persistence {
                Some(true)
            } else if self.raised[i] && !outside {
                Some(false)
            } else {
                None
            };
            if let Some(raised) = transition {
                self.raised[i] = raised;
                out.push(ThresholdAlarm {
                    channel: CHANNELS.get(i).map_or_else(|| format!("#{i}"), |c| c.label.to_string()),
                    value: v,
                    steady: self.steady[i],
                    threshold: self.band[i],
                    raised,
                });
            }
        }
        out
    }

    pub fn reset(&mut self) {
        self.run.iter_mut().for_each(|r| *r = 0);
        self.raised.iter_mut().for_each(|r| *r = false);
    }
}
