//! Live simulation sessions.
//!
//! Each session is a tokio task that owns its [`Simulator`]. Handlers talk to
//! it over an mpsc channel; frames, diagnoses and log entries fan out to
//! subscribers through a broadcast channel. Sessions run until deleted and
//! ignore the scenario's `duration_steps`.
//!
//! Log timestamps use the session clock: simulated seconds since the session
//! was created. It keeps counting across resets, while frame times restart
//! from zero.

use std::collections::VecDeque;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::MissedTickBehavior;

use super::events::{
    AlarmConfig, DiagnosisReport, EventKind, EventLogEntry, StreamMessage, ThresholdMonitor,
};
use crate::error::Error;
use crate::pipeline::DiagnosisModel;
use crate::plantsim::{FaultKind, PlantConfig, ScenarioSpec, Simulator, TelemetryFrame};

/// The currently loaded model, swapped as a whole.
pub type ModelStore = Arc<RwLock<Option<Arc<DiagnosisModel>>>>;

const STREAM_CAPACITY: usize = 4096;
/// Largest `step` request, kept well under the stream capacity so a
/// subscriber that keeps up does not lag.
pub const MAX_STEP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Wall-clock milliseconds per simulation step at speed 1.
    pub tick_ms: u64,
    /// Time compression factor.
    pub speed: u32,
    /// Frames per diagnosis window.
    pub window: usize,
    /// Ticks between windowed diagnoses.
    pub stride: usize,
    pub alarms: AlarmConfig,
    pub start_paused: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self { tick_ms: 200, speed: 1, window: 50, stride: 10, alarms: AlarmConfig::default(), start_paused: false }
    }
}

impl SessionConfig {
    pub fn tick_period(&self) -> Duration {
        Duration::from_secs_f64(self.tick_ms.max(1) as f64 / 1000.0 / f64::from(self.speed.max(1)))
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.window == 0 || self.stride == 0 || self.speed == 0 || self.tick_ms == 0 {
            return Err(SessionError::Invalid("tick_ms, speed, window and stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRequest {
    pub kind: FaultKind,
    #[serde(alias = "severity_percent")]
    pub severity: f64,
    #[serde(default)]
    pub eccs_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum ControlAction {
    Pause,
    Resume,
    Reset,
    /// Advance a paused session by `count` steps.
    Step {
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub scenario: ScenarioSpec,
    pub running: bool,
    pub session_clock: f64,
    pub time: f64,
    pub fault_active: bool,
    pub eccs_active: bool,
    pub tripped: bool,
    pub model_loaded: bool,
    pub tick_period_ms: f64,
    pub window: usize,
    pub stride: usize,
    pub log_len: usize,
    pub latest: TelemetryFrame,
    pub last_diagnosis: Option<DiagnosisReport>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("a fault is already active in this session")]
    FaultActive,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("no diagnosis model is loaded")]
    NoModel,
    #[error("diagnosis failed: {0}")]
    Diagnosis(String),
    #[error("session has stopped")]
    Closed,
}

enum Command {
    Snapshot(oneshot::Sender<SessionSnapshot>),
    Inject(FaultRequest, oneshot::Sender<Result<EventLogEntry, SessionError>>),
    Control(ControlAction, oneshot::Sender<Result<SessionSnapshot, SessionError>>),
    Log(oneshot::Sender<Vec<EventLogEntry>>),
    Diagnose(oneshot::Sender<Result<DiagnosisReport, SessionError>>),
}

/// Cheap, cloneable handle to a running session.
#[derive(Clone)]
pub struct SessionHandle {
    id: String,
    commands: mpsc::Sender<Command>,
    stream: broadcast::Sender<StreamMessage>,
}

impl SessionHandle {
    /// Start a session task on the current tokio runtime.
    pub fn spawn(
        id: String,
        scenario: ScenarioSpec,
        plant: PlantConfig,
        cfg: SessionConfig,
        models: ModelStore,
    ) -> Result<Self, SessionError> {
        cfg.validate()?;
        let sim = Simulator::new(scenario.clone(), plant).map_err(|e| SessionError::Invalid(e.to_string()))?;
        let (cmd_tx, cmd_rx) = mpsc::channel(64);
        let (stream, _) = broadcast::channel(STREAM_CAPACITY);
        let monitor = ThresholdMonitor::new(sim.state().steady(), scenario.noise_sigma, &cfg.alarms);
        let mut actor = Actor {
            id: id.clone(),
            initial: scenario,
            running: !cfg.start_paused,
            window: VecDeque::with_capacity(cfg.window),
            ticks: 0,
            clock: 0.0,
            log: Vec::new(),
            last_diagnosis: None,
            stream: stream.clone(),
            monitor,
            sim,
            cfg,
            models,
        };
        actor.push_frame(actor.sim.frame());
        tokio::spawn(actor.run(cmd_rx));
        Ok(Self { id, commands: cmd_tx, stream })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamMessage> {
        self.stream.subscribe()
    }

    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, SessionError> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).await.map_err(|_| SessionError::Closed)?;
        rx.await.map_err(|_| SessionError::Closed)
    }

    pub async fn snapshot(&self) -> Result<SessionSnapshot, SessionError> {
        self.ask(Command::Snapshot).await
    }

    pub async fn inject(&self, req: FaultRequest) -> Result<EventLogEntry, SessionError> {
        self.ask(|tx| Command::Inject(req, tx)).await?
    }

    pub async fn control(&self, action: ControlAction) -> Result<SessionSnapshot, SessionError> {
        self.ask(|tx| Command::Control(action, tx)).await?
    }

    pub async fn log(&self) -> Result<Vec<EventLogEntry>, SessionError> {
        self.ask(Command::Log).await
    }

    /// Diagnose the current window on demand.
    pub async fn diagnose(&self) -> Result<DiagnosisReport, SessionError> {
        self.ask(Command::Diagnose).await?
    }
}

struct Actor {
    id: String,
    initial: ScenarioSpec,
    sim: Simulator,
    cfg: SessionConfig,
    models: ModelStore,
    running: bool,
    window: VecDeque<TelemetryFrame>,
    ticks: u64,
    clock: f64,
    log: Vec<EventLogEntry>,
    last_diagnosis: Option<DiagnosisReport>,
    stream: broadcast::Sender<StreamMessage>,
    monitor: ThresholdMonitor,
}

impl Actor {
    async fn run(mut self, mut commands: mpsc::Receiver<Command>) {
        let mut ticker = tokio::time::interval(self.cfg.tick_period());
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        ticker.tick().await;
        loop {
            tokio::select! {
                biased;
                cmd = commands.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = ticker.tick(), if self.running => self.tick(),
            }
        }
        tracing::debug!(session = %self.id, "session stopped");
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Snapshot(tx) => {
                let _ = tx.send(self.snapshot());
            }
            Command::Inject(req, tx) => {
                let _ = tx.send(self.inject(req));
            }
            Command::Control(action, tx) => {
                let _ = tx.send(self.control(action));
            }
            Command::Log(tx) => {
                let _ = tx.send(self.log.clone());
            }
            Command::Diagnose(tx) => {
                let res = self.diagnose_window();
                if let Ok(report) = &res {
                    self.issue(report.clone());
                }
                let _ = tx.send(res);
            }
        }
    }

    fn model(&self) -> Option<Arc<DiagnosisModel>> {
        self.models.read().ok().and_then(|m| m.clone())
    }

    fn snapshot(&self) -> SessionSnapshot {
        let state = self.sim.state();
        SessionSnapshot {
            session_id: self.id.clone(),
            scenario: self.sim.scenario().clone(),
            running: self.running,
            session_clock: self.clock,
            time: state.time,
            fault_active: self.sim.scenario().fault_kind != FaultKind::Normal,
            eccs_active: state.eccs_active(),
            tripped: state.tripped(),
            model_loaded: self.model().is_some(),
            tick_period_ms: self.cfg.tick_period().as_secs_f64() * 1000.0,
            window: self.cfg.window,
            stride: self.cfg.stride,
            log_len: self.log.len(),
            latest: self.sim.frame(),
            last_diagnosis: self.last_diagnosis.clone(),
        }
    }

    fn record(&mut self, kind: EventKind, payload: serde_json::Value) -> EventLogEntry {
        let entry = EventLogEntry { timestamp: self.clock, kind, payload };
        self.log.push(entry.clone());
        let _ = self.stream.send(StreamMessage::Event(entry.clone()));
        entry
    }

    fn push_frame(&mut self, frame: TelemetryFrame) {
        if self.window.len() == self.cfg.window {
            self.window.pop_front();
        }
        self.window.push_back(frame);
    }

    fn tick(&mut self) {
        let frame = self.sim.step();
        self.ticks += 1;
        self.clock += self.sim.scenario().dt;
        self.push_frame(frame.clone());
        let _ = self.stream.send(StreamMessage::Frame(frame.clone()));

        for alarm in self.monitor.observe(&frame.values) {
            let mut payload = serde_json::to_value(&alarm).unwrap_or_default();
            payload["time"] = json!(frame.time);
            self.record(EventKind::ThresholdAlarm, payload);
        }

        if self.ticks.is_multiple_of(self.cfg.stride as u64) && self.window.len() >= self.cfg.window {
            match self.diagnose_window() {
                Ok(report) => self.issue(report),
                Err(SessionError::NoModel) => {}
                Err(e) => tracing::warn!(session = %self.id, error = %e, "windowed diagnosis failed"),
            }
        }
    }

    fn diagnose_window(&self) -> Result<DiagnosisReport, SessionError> {
        let model = self.model().ok_or(SessionError::NoModel)?;
        let rows: Vec<Vec<f64>> = self.window.iter().map(|f| f.values.clone()).collect();
        let diagnosis = model.diagnose_rows(&rows).map_err(|e| SessionError::Diagnosis(e.to_string()))?;
        let time = self.window.back().map_or(0.0, |f| f.time);
        Ok(DiagnosisReport::new(time, diagnosis))
    }

    fn issue(&mut self, report: DiagnosisReport) {
        let _ = self.stream.send(StreamMessage::Diagnosis(report.clone()));
        self.record(EventKind::DiagnosisIssued, serde_json::to_value(&report).unwrap_or_default());
        self.last_diagnosis = Some(report);
    }

    fn inject(&mut self, req: FaultRequest) -> Result<EventLogEntry, SessionError> {
        if self.sim.scenario().fault_kind != FaultKind::Normal {
            return Err(SessionError::FaultActive);
        }
        if req.kind == FaultKind::Normal {
            return Err(SessionError::Invalid("cannot inject Normal".into()));
        }
        self.sim
            .inject(req.kind, req.severity, req.eccs_enabled)
            .map_err(|e: Error| SessionError::Invalid(e.to_string()))?;
        let payload = json!({
            "kind": req.kind,
            "severity": req.severity,
            "eccs_enabled": req.eccs_enabled,
            "plant_time": self.sim.state().time,
            "description": req.kind.describe(),
        });
        Ok(self.record(EventKind::FaultInjected, payload))
    }

    fn control(&mut self, action: ControlAction) -> Result<SessionSnapshot, SessionError> {
        match action {
            ControlAction::Pause => self.running = false,
            ControlAction::Resume => self.running = true,
            ControlAction::Reset => {
                self.sim.reset(self.initial.clone()).map_err(|e| SessionError::Invalid(e.to_string()))?;
                self.window.clear();
                self.ticks = 0;
                self.monitor.reset();
                self.last_diagnosis = None;
                self.push_frame(self.sim.frame());
            }
            ControlAction::Step { count } => {
                if self.running {
                    return Err(SessionError::Invalid("pause the session before stepping".into()));
                }
                if count == 0 || count > MAX_STEP {
                    return Err(SessionError::Invalid(format!("step count must be in 1..={MAX_STEP}")));
                }
                for _ in 0..count {
                    self.tick();
                }
            }
        }
        let payload = serde_json::to_value(action).unwrap_or_default();
        self.record(EventKind::SessionControl, payload);
        Ok(self.snapshot())
    }
}
