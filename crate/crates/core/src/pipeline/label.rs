//! Two-output fault encoding: (size %, location code).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plantsim::FaultKind;

/// Target pattern for one fault: rupture size and where it is.
///
/// Location codes: 0 none, 1 SG-A, 2 SG-B, 3 RCS pump #1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultLabel {
    pub size_percent: f64,
    pub location_code: u8,
}

impl FaultLabel {
    pub const NORMAL: FaultLabel = FaultLabel { size_percent: 0.0, location_code: 0 };

    pub fn as_output(&self) -> [f64; 2] {
        [self.size_percent, f64::from(self.location_code)]
    }
}

impl fmt::Display for FaultLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}, {:.2}", self.size_percent, f64::from(self.location_code))
    }
}

pub fn location_code(kind: FaultKind) -> u8 {
    match kind {
        FaultKind::Normal => 0,
        FaultKind::SgtrA => 1,
        FaultKind::SgtrB => 2,
        FaultKind::LockedRotorPump1 => 3,
    }
}

pub fn location_name(code: u8) -> &'static str {
    match code {
        0 => "Normal",
        1 => "SG-A",
        2 => "SG-B",
        3 => "RCS pump #1",
        _ => "unknown",
    }
}

pub fn encode_label(kind: FaultKind, severity_percent: f64) -> Result<FaultLabel> {
    if !(0.0..=100.0).contains(&severity_percent) {
        return Err(Error::Label(format!("severity {severity_percent} outside [0, 100]")));
    }
    let code = location_code(kind);
    if (code == 0) != (severity_percent == 0.0) {
        return Err(Error::Label(format!(
            "{kind:?} with severity {severity_percent}: a zero size must go with location 0 and vice versa"
        )));
    }
    Ok(FaultLabel { size_percent: severity_percent, location_code: code })
}

/// Decoded network output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedOutput {
    pub size_percent: f64,
    pub location_code: u8,
}

/// Clamp the size to [0, 100] and round the location to the nearest code;
/// exact half-way values go to the lower code.
pub fn decode_output(raw: [f64; 2]) -> Result<DecodedOutput> {
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::Diagnosis(format!("non-finite network output {raw:?}")));
    }
    let loc = raw[1].clamp(0.0, 3.0);
    let base = loc.floor();
    let code = if loc - base > 0.5 { base + 1.0 } else { base };
    Ok(DecodedOutput { size_percent: raw[0].clamp(0.0, 100.0), location_code: code as u8 })
}
