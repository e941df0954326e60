//! C ABI over `pwrdiag`: load a diagnosis model, diagnose telemetry
//! windows, and step the plant simulator.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a
//! [`PwrdiagStatus`]; on failure the message is available from
//! [`pwrdiag_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use pwrdiag::pipeline::DiagnosisModel;
use pwrdiag::plantsim::{channel_labels, FaultKind, PlantConfig, ScenarioSpec, Simulator, CHANNEL_COUNT};
use pwrdiag::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwrdiagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    UnsupportedVersion = 5,
    Shape = 6,
    Diagnosis = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwrdiagFaultKind {
    Normal = 0,
    SgtrA = 1,
    SgtrB = 2,
    LockedRotorPump1 = 3,
}

impl From<PwrdiagFaultKind> for FaultKind {
    fn from(k: PwrdiagFaultKind) -> Self {
        match k {
            PwrdiagFaultKind::Normal => FaultKind::Normal,
            PwrdiagFaultKind::SgtrA => FaultKind::SgtrA,
            PwrdiagFaultKind::SgtrB => FaultKind::SgtrB,
            PwrdiagFaultKind::LockedRotorPump1 => FaultKind::LockedRotorPump1,
        }
    }
}

/// Window diagnosis. `raw_size` and `raw_location` are the averaged
/// network outputs before clamping and rounding.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PwrdiagDiagnosis {
    pub predicted_size: f64,
    pub predicted_location: u8,
    pub raw_size: f64,
    pub raw_location: f64,
    pub window_frames: usize,
}

/// Opaque trained model.
pub struct PwrdiagModel {
    inner: DiagnosisModel,
}

/// Opaque simulator.
pub struct PwrdiagSimulator {
    inner: Simulator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PwrdiagStatus, msg: impl Into<String>) -> PwrdiagStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> PwrdiagStatus {
    match err {
        Error::Io(_) => PwrdiagStatus::Io,
        Error::Json(_) | Error::Csv(_) => PwrdiagStatus::Parse,
        Error::Version { .. } => PwrdiagStatus::UnsupportedVersion,
        Error::Shape { .. } => PwrdiagStatus::Shape,
        Error::Diagnosis(_) => PwrdiagStatus::Diagnosis,
        _ => PwrdiagStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PwrdiagStatus, String)>) -> PwrdiagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PwrdiagStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(PwrdiagStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (PwrdiagStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PwrdiagStatus, String)> {
    if p.is_null() {
        return Err((PwrdiagStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (PwrdiagStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pwrdiag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pwrdiag_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap()).as_ptr()
}

/// Number of simulator channels.
#[no_mangle]
pub extern "C" fn pwrdiag_channel_count() -> usize {
    CHANNEL_COUNT
}

/// Static label of simulator channel `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn pwrdiag_channel_label(index: usize) -> *const c_char {
    static LABELS: OnceLock<Vec<CString>> = OnceLock::new();
    let labels = LABELS.get_or_init(|| channel_labels().into_iter().map(|l| CString::new(l).unwrap()).collect());
    labels.get(index).map_or(ptr::null(), |l| l.as_ptr())
}

/// Load a model file. On success `*out` receives a handle to free with
/// [`pwrdiag_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_model_load_file(path: *const c_char, out: *mut *mut PwrdiagModel) -> PwrdiagStatus {
    guard(|| {
        if out.is_null() {
            return Err((PwrdiagStatus::NullPointer, "out is null".into()));
        }
        let path = str_arg(path, "path")?;
        let inner = DiagnosisModel::load(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PwrdiagModel { inner }));
        Ok(())
    })
}

/// Load a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_model_load_json(json: *const c_char, out: *mut *mut PwrdiagModel) -> PwrdiagStatus {
    guard(|| {
        if out.is_null() {
            return Err((PwrdiagStatus::NullPointer, "out is null".into()));
        }
        let json = str_arg(json, "json")?;
        let inner = DiagnosisModel::from_json(json).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PwrdiagModel { inner }));
        Ok(())
    })
}

/// Channels the model expects per frame; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_model_channel_count(model: *const PwrdiagModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.channel_order.len())
}

/// Diagnose a window of `n_frames` frames stored row-major, `n_channels`
/// values each, in the model's channel order.
///
/// # Safety
/// `model` must be a live handle, `frames` must point to
/// `n_frames * n_channels` doubles, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_model_diagnose(
    model: *const PwrdiagModel,
    frames: *const f64,
    n_frames: usize,
    n_channels: usize,
    out: *mut PwrdiagDiagnosis,
) -> PwrdiagStatus {
    guard(|| {
        let model = model.as_ref().ok_or((PwrdiagStatus::NullPointer, "model is null".to_string()))?;
        if frames.is_null() || out.is_null() {
            return Err((PwrdiagStatus::NullPointer, "frames or out is null".into()));
        }
        if n_frames == 0 {
            return Err((PwrdiagStatus::InvalidArgument, "empty window".into()));
        }
        let expected = model.inner.channel_order.len();
        if n_channels != expected {
            return Err((PwrdiagStatus::Shape, format!("model expects {expected} channels, got {n_channels}")));
        }
        let len = n_frames
            .checked_mul(n_channels)
            .ok_or((PwrdiagStatus::InvalidArgument, "window size overflows".to_string()))?;
        let data = std::slice::from_raw_parts(frames, len);
        let rows: Vec<Vec<f64>> = data.chunks_exact(n_channels).map(<[f64]>::to_vec).collect();
        let d = model.inner.diagnose_rows(&rows).map_err(lib_err)?;
        *out = PwrdiagDiagnosis {
            predicted_size: d.predicted_size,
            predicted_location: d.predicted_location,
            raw_size: d.raw_output[0],
            raw_location: d.raw_output[1],
            window_frames: d.window_frames,
        };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_model_free(model: *mut PwrdiagModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Create a simulator from scenario JSON (null for normal operation) with
/// the default plant parameters.
///
/// # Safety
/// `scenario_json` must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_simulator_new(
    scenario_json: *const c_char,
    out: *mut *mut PwrdiagSimulator,
) -> PwrdiagStatus {
    guard(|| {
        if out.is_null() {
            return Err((PwrdiagStatus::NullPointer, "out is null".into()));
        }
        let scenario = if scenario_json.is_null() {
            ScenarioSpec::normal()
        } else {
            let text = str_arg(scenario_json, "scenario_json")?;
            serde_json::from_str(text).map_err(|e| (PwrdiagStatus::Parse, e.to_string()))?
        };
        let inner = Simulator::new(scenario, PlantConfig::default()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PwrdiagSimulator { inner }));
        Ok(())
    })
}

unsafe fn write_frame(
    frame: &pwrdiag::plantsim::TelemetryFrame,
    values: *mut f64,
    len: usize,
    time: *mut f64,
) -> Result<(), (PwrdiagStatus, String)> {
    if values.is_null() {
        return Err((PwrdiagStatus::NullPointer, "values is null".into()));
    }
    if len < frame.values.len() {
        return Err((PwrdiagStatus::Shape, format!("buffer holds {len} values, need {}", frame.values.len())));
    }
    ptr::copy_nonoverlapping(frame.values.as_ptr(), values, frame.values.len());
    if !time.is_null() {
        *time = frame.time;
    }
    Ok(())
}

/// Copy the current frame into `values` (at least
/// [`pwrdiag_channel_count`] doubles). `time` may be null.
///
/// # Safety
/// `sim` must be a live handle and `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_simulator_frame(
    sim: *const PwrdiagSimulator,
    values: *mut f64,
    len: usize,
    time: *mut f64,
) -> PwrdiagStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or((PwrdiagStatus::NullPointer, "sim is null".to_string()))?;
        write_frame(&sim.inner.frame(), values, len, time)
    })
}

/// Advance one step and copy the new frame out.
///
/// # Safety
/// `sim` must be a live handle and `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_simulator_step(
    sim: *mut PwrdiagSimulator,
    values: *mut f64,
    len: usize,
    time: *mut f64,
) -> PwrdiagStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or((PwrdiagStatus::NullPointer, "sim is null".to_string()))?;
        if !values.is_null() && len < CHANNEL_COUNT {
            return Err((PwrdiagStatus::Shape, format!("buffer holds {len} values, need {CHANNEL_COUNT}")));
        }
        let frame = sim.inner.step();
        write_frame(&frame, values, len, time)
    })
}

/// Start a fault at the simulator's current time.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_simulator_inject(
    sim: *mut PwrdiagSimulator,
    kind: PwrdiagFaultKind,
    severity_percent: f64,
    eccs_enabled: bool,
) -> PwrdiagStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or((PwrdiagStatus::NullPointer, "sim is null".to_string()))?;
        sim.inner.inject(kind.into(), severity_percent, eccs_enabled).map_err(lib_err)
    })
}

/// # Safety
/// `sim` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pwrdiag_simulator_free(sim: *mut PwrdiagSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
