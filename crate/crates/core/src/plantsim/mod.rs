//! Lumped-parameter surrogate of a two-loop PWR.
//!
//! Every channel relaxes toward a fault-dependent target with a first-order
//! lag, so after onset a channel follows
//! `x(t) = x_ss + gain * s * (1 - exp(-(t - onset) / tau))`.
//! Measurement noise is additive Gaussian with a standard deviation
//! proportional to the channel's steady value, truncated at three sigma.

mod channels;
mod corpus;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::FaultLabel;

pub use channels::{
    channel_index, channel_labels, steady_values, ChannelDef, Gain, Lag, Side, CHANNELS,
    CHANNEL_COUNT,
};
pub use corpus::{
    generate_corpus, read_corpus_csv, read_telemetry_csv, run_scenario, reference_scenarios,
    write_corpus_csv, CsvTelemetry, LabeledDataset,
};

use channels::{
    ECCS_MAX_FLOW, IDX_LVPZ, IDX_P, IDX_VOID, IDX_VOL, IDX_WEC, IDX_WRCA, ROTOR_COASTDOWN_S,
    ROTOR_RESIDUAL_FLOW, ROTOR_TRIP_DELAY_S,
};

/// Nominal operating point of the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// MW thermal.
    pub core_thermal_power: f64,
    /// bar.
    pub rcs_pressure: f64,
    /// degC.
    pub coolant_avg_temp: f64,
    /// m3/h.
    pub loop_flow: f64,
    /// t/h.
    pub core_flow: f64,
    pub pressurizer_level_frac: f64,
    /// bar; ECCS high-pressure injection starts below this.
    pub hpi_setpoint: f64,
    /// t/h.
    pub charging_flow: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            core_thermal_power: 1930.0,
            rcs_pressure: 155.0,
            coolant_avg_temp: 310.0,
            loop_flow: 46640.0,
            core_flow: 30530.0,
            pressurizer_level_frac: 0.565,
            hpi_setpoint: 129.69,
            charging_flow: 30.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("core_thermal_power", self.core_thermal_power),
            ("rcs_pressure", self.rcs_pressure),
            ("coolant_avg_temp", self.coolant_avg_temp),
            ("loop_flow", self.loop_flow),
            ("core_flow", self.core_flow),
            ("pressurizer_level_frac", self.pressurizer_level_frac),
            ("hpi_setpoint", self.hpi_setpoint),
            ("charging_flow", self.charging_flow),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.pressurizer_level_frac > 1.0 {
            return Err(Error::Config("pressurizer_level_frac must not exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultKind {
    Normal,
    SgtrA,
    SgtrB,
    LockedRotorPump1,
}

impl FaultKind {
    pub fn describe(self) -> &'static str {
        match self {
            FaultKind::Normal => "Normal operation",
            FaultKind::SgtrA => "SG-A tube rupture",
            FaultKind::SgtrB => "SG-B tube rupture",
            FaultKind::LockedRotorPump1 => "Locked rotor, RCS pump #1",
        }
    }
}

fn default_onset() -> f64 {
    50.0
}
fn default_duration() -> usize {
    1000
}
fn default_dt() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.01
}

/// One malfunction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub fault_kind: FaultKind,
    #[serde(default)]
    pub severity_percent: f64,
    #[serde(default = "default_onset")]
    pub onset_time: f64,
    #[serde(default = "default_duration")]
    pub duration_steps: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Noise standard deviation as a fraction of each channel's steady value.
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub eccs_enabled: bool,
}

impl ScenarioSpec {
    pub fn new(fault_kind: FaultKind, severity_percent: f64) -> Self {
        Self {
            fault_kind,
            severity_percent,
            onset_time: default_onset(),
            duration_steps: default_duration(),
            dt: default_dt(),
            noise_sigma: default_noise(),
            rng_seed: 0,
            eccs_enabled: false,
        }
    }

    pub fn normal() -> Self {
        Self::new(FaultKind::Normal, 0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.duration_steps = steps;
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_eccs(mut self, enabled: bool) -> Self {
        self.eccs_enabled = enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.severity_percent;
        if !(0.0..=100.0).contains(&s) {
            return Err(Error::Config(format!("severity_percent {s} outside [0, 100]")));
        }
        if self.fault_kind == FaultKind::Normal && s != 0.0 {
            return Err(Error::Config("a Normal scenario must have severity 0".into()));
        }
        if !(self.onset_time.is_finite() && self.onset_time >= 0.0) {
            return Err(Error::Config("onset_time must be >= 0".into()));
        }
        if self.duration_steps == 0 {
            return Err(Error::Config("duration_steps must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config("dt must be > 0".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Short human-readable case name, e.g. `SgtrA 15%`.
    pub fn case_name(&self) -> String {
        match self.fault_kind {
            FaultKind::Normal => "Normal".to_string(),
            k => format!("{k:?} {}%", self.severity_percent),
        }
    }
}

/// A time-stamped vector of channel readings in [`CHANNELS`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EccsLatch {
    pressure: f64,
    volume: f64,
    level: f64,
}

/// Simulator state. `process` holds the noise-free plant values the
/// dynamics act on; `measured` is what the instruments report.
#[derive(Debug, Clone)]
pub struct PlantState {
    pub time: f64,
    pub process: Vec<f64>,
    pub measured: Vec<f64>,
    steady: Arc<[f64]>,
    hpi_setpoint: f64,
    eccs: Option<EccsLatch>,
    tripped: bool,
}

impl PlantState {
    pub fn steady(&self) -> &[f64] {
        &self.steady
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        channel_index(label).map(|i| self.measured[i])
    }

    pub fn process_value(&self, label: &str) -> Option<f64> {
        channel_index(label).map(|i| self.process[i])
    }

    pub fn eccs_active(&self) -> bool {
        self.eccs.is_some()
    }

    pub fn tripped(&self) -> bool {
        self.tripped
    }

    /// Re-draw the measurement noise for the current process values.
    pub fn remeasure(&mut self, sigma: f64, noise: &mut NoiseSource) {
        self.measured = measure(&self.process, &self.steady, sigma, noise);
    }

    pub fn frame(&self) -> TelemetryFrame {
        TelemetryFrame { time: self.time, values: self.measured.clone() }
    }
}

/// Measurement noise never exceeds this many standard deviations.
pub const NOISE_CLIP: f64 = 3.0;

/// Seeded Gaussian noise stream.
#[derive(Debug, Clone)]
pub struct NoiseSource(ChaCha8Rng);

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Standard normal draw truncated to `[-3, 3]` by rejection.
    pub fn truncated_normal(&mut self) -> f64 {
        loop {
            let z = self.standard_normal();
            if z.abs() <= NOISE_CLIP {
                return z;
            }
        }
    }
}

/// Plant at rest at time 0.
pub fn init_steady_state(config: &PlantConfig) -> Result<PlantState> {
    config.validate()?;
    let steady: Arc<[f64]> = steady_values(config).into();
    Ok(PlantState {
        time: 0.0,
        process: steady.to_vec(),
        measured: steady.to_vec(),
        steady,
        hpi_setpoint: config.hpi_setpoint,
        eccs: None,
        tripped: false,
    })
}

fn fault_target(def: &ChannelDef, steady: f64, kind: FaultKind, s: f64, tripped: bool) -> f64 {
    let loop_gain = |gain: Gain, faulted: Side| match def.side {
        Side::Plant => gain.same,
        side if side == faulted => gain.same,
        _ => gain.other,
    };
    let delta = match kind {
        FaultKind::Normal => 0.0,
        FaultKind::SgtrA => loop_gain(def.sgtr, Side::LoopA),
        FaultKind::SgtrB => loop_gain(def.sgtr, Side::LoopB),
        FaultKind::LockedRotorPump1 if tripped => loop_gain(def.rotor_post_trip, Side::LoopA),
        FaultKind::LockedRotorPump1 => loop_gain(def.rotor_pre_trip, Side::LoopA),
    };
    steady + s * delta
}

/// Advance the plant by one `dt`.
///
/// The fault is active over `[t, t + dt)` whenever `t >= onset_time`.
pub fn step(state: &PlantState, scenario: &ScenarioSpec, noise: &mut NoiseSource) -> PlantState {
    let dt = scenario.dt;
    let t0 = state.time;
    let t1 = t0 + dt;
    let active = scenario.fault_kind != FaultKind::Normal && t0 >= scenario.onset_time;
    let kind = if active { scenario.fault_kind } else { FaultKind::Normal };
    let s = scenario.severity_percent / 100.0;
    let steady = &state.steady;

    let tripped = state.tripped
        || (kind == FaultKind::LockedRotorPump1 && t0 >= scenario.onset_time + ROTOR_TRIP_DELAY_S);

    let eccs = match state.eccs {
        Some(latch) => Some(latch),
        None if scenario.eccs_enabled && state.process[IDX_P] < state.hpi_setpoint => {
            Some(EccsLatch {
                pressure: state.process[IDX_P],
                volume: state.process[IDX_VOL],
                level: state.process[IDX_LVPZ],
            })
        }
        None => None,
    };

    let mut process = Vec::with_capacity(CHANNEL_COUNT);
    for (i, def) in CHANNELS.iter().enumerate() {
        let mut target = fault_target(def, steady[i], kind, s, tripped);
        if i == IDX_WEC && eccs.is_some() {
            target = ECCS_MAX_FLOW;
        }
        if let Some(latch) = eccs {
            // Injection progressively holds inventory and pressure where
            // they stood when the signal latched.
            let held = match i {
                IDX_P => Some(latch.pressure),
                IDX_VOL => Some(latch.volume),
                IDX_LVPZ => Some(latch.level),
                _ => None,
            };
            if let Some(h) = held {
                let frac = (state.process[IDX_WEC] / ECCS_MAX_FLOW).clamp(0.0, 1.0);
                target = target + (h - target).max(0.0) * frac;
            }
        }
        let decay = (-dt / def.lag.tau()).exp();
        let mut x = target + (state.process[i] - target) * decay;
        if i == IDX_WRCA && kind == FaultKind::LockedRotorPump1 {
            let progress = ((t1 - scenario.onset_time) / ROTOR_COASTDOWN_S).clamp(0.0, 1.0);
            x = steady[i] * (1.0 - (1.0 - ROTOR_RESIDUAL_FLOW) * s * progress);
        }
        process.push(x);
    }

    let measured = measure(&process, steady, scenario.noise_sigma, noise);
    PlantState {
        time: t1,
        process,
        measured,
        steady: Arc::clone(steady),
        hpi_setpoint: state.hpi_setpoint,
        eccs,
        tripped,
    }
}

fn measure(process: &[f64], steady: &[f64], sigma: f64, noise: &mut NoiseSource) -> Vec<f64> {
    process
        .iter()
        .zip(steady)
        .enumerate()
        .map(|(i, (&x, &ss))| {
            let mut v = x + sigma * ss.abs() * noise.truncated_normal();
            if matches!(i, IDX_VOID | IDX_LVPZ) {
                v = v.clamp(0.0, 100.0);
            }
            if CHANNELS[i].unit == "t/h" {
                v = v.max(0.0);
            }
            v
        })
        .collect()
}

/// Labelled run of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientRecord {
    pub scenario: ScenarioSpec,
    pub frames: Vec<TelemetryFrame>,
    pub label: FaultLabel,
}

/// Owns a plant state, its scenario, and its noise stream.
///
/// The scenario may be swapped mid-run (live fault injection); the state and
/// noise stream carry on.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: PlantConfig,
    scenario: ScenarioSpec,
    state: PlantState,
    noise: NoiseSource,
}

impl Simulator {
    /// Starts at time 0 with the first frame already measured.
    pub fn new(scenario: ScenarioSpec, config: PlantConfig) -> Result<Self> {
        scenario.validate()?;
        let mut state = init_steady_state(&config)?;
        let mut noise = NoiseSource::new(scenario.rng_seed);
        state.remeasure(scenario.noise_sigma, &mut noise);
        Ok(Self { config, scenario, state, noise })
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn frame(&self) -> TelemetryFrame {
        self.state.frame()
    }

    pub fn step(&mut self) -> TelemetryFrame {
        self.state = step(&self.state, &self.scenario, &mut self.noise);
        self.state.frame()
    }

    /// Inject a fault starting at the current time.
    pub fn inject(&mut self, kind: FaultKind, severity_percent: f64, eccs_enabled: bool) -> Result<()> {
        let mut next = self.scenario.clone();
        next.fault_kind = kind;
        next.severity_percent = severity_percent;
        next.onset_time = self.state.time;
        next.eccs_enabled = eccs_enabled;
        next.validate()?;
        self.scenario = next;
        Ok(())
    }

    /// Back to time 0 with a fresh noise stream from the same seed.
    pub fn reset(&mut self, scenario: ScenarioSpec) -> Result<()> {
        *self = Self::new(scenario, self.config.clone())?;
        Ok(())
    }
}
