//! Command-line interface and the live HTTP / WebSocket service.

pub mod cli;
mod events;
pub mod http;
mod session;

pub use events::{
    AlarmConfig, DiagnosisReport, EventKind, EventLogEntry, StreamMessage, ThresholdAlarm, ThresholdMonitor,
};
pub use http::{router, serve, serve_on, AppState, ApiError, CreateSession, ModelSummary};
pub use session::{
    ControlAction, FaultRequest, ModelStore, SessionConfig, SessionError, SessionHandle, SessionSnapshot, MAX_STEP,
};
