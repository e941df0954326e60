//! The 43 monitored process channels and their fault-response gains.
//!
//! Channel order follows the plant's parameter list: A/B pairs are expanded
//! in place, repeated entries (fuel temperature, the second set of cold-leg
//! sensors) are kept as separate instruments, and the charging flow closes
//! the list.
//!
//! Gains are absolute deltas at 100% severity; a fault at severity `s`
//! drives the channel toward `steady + s * gain`.

use super::PlantConfig;

/// Lag class of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lag {
    /// Thermal / inventory channels, 60 s.
    Slow,
    /// Flow and power channels, 10 s.
    Fast,
}

impl Lag {
    pub fn tau(self) -> f64 {
        match self {
            Lag::Slow => 60.0,
            Lag::Fast => 10.0,
        }
    }
}

/// Which coolant loop a channel instruments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plant,
    LoopA,
    LoopB,
}

/// Response of a channel to a fault on the same loop and on the other loop.
/// Plant-wide channels only use `same`.
#[derive(Debug, Clone, Copy)]
pub struct Gain {
    pub same: f64,
    pub other: f64,
}

const fn g(same: f64) -> Gain {
    Gain { same, other: 0.0 }
}

const fn gl(same: f64, other: f64) -> Gain {
    Gain { same, other }
}

#[derive(Debug, Clone, Copy)]
pub struct ChannelDef {
    pub label: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
    pub side: Side,
    pub lag: Lag,
    /// Steam generator tube rupture.
    pub sgtr: Gain,
    /// Locked rotor, before the reactor trip.
    pub rotor_pre_trip: Gain,
    /// Locked rotor, after the reactor trip.
    pub rotor_post_trip: Gain,
}

macro_rules! ch {
    ($label:expr, $unit:expr, $desc:expr, $side:ident, $lag:ident, $sgtr:expr, $pre:expr, $post:expr) => {
        ChannelDef {
            label: $label,
            unit: $unit,
            description: $desc,
            side: Side::$side,
            lag: Lag::$lag,
            sgtr: $sgtr,
            rotor_pre_trip: $pre,
            rotor_post_trip: $post,
        }
    };
}

pub const CHANNEL_COUNT: usize = 43;

#[rustfmt::skip]
pub const CHANNELS: [ChannelDef; CHANNEL_COUNT] = [
    ch!("P",     "bar",      "Pressure of RCS",                        Plant, Slow, g(-50.0),          g(8.0),          g(-25.0)),
    ch!("TCA",   "degC",     "Temperature of cold leg A",              LoopA, Slow, gl(-15.0, -5.0),   gl(2.0, 1.0),    gl(-12.0, -18.0)),
    ch!("TCB",   "degC",     "Temperature of cold leg B",              LoopB, Slow, gl(-15.0, -5.0),   gl(2.0, 1.0),    gl(-12.0, -18.0)),
    ch!("QMWT",  "MW",       "Total thermal power",                    Plant, Fast, g(-150.0),         g(120.0),        g(-1830.0)),
    ch!("QMGA",  "MW",       "Power of SG-A heat removal",             LoopA, Slow, gl(-250.0, 60.0),  gl(-150.0, 50.0), gl(-900.0, -870.0)),
    ch!("QMGB",  "MW",       "Power of SG-B heat removal",             LoopB, Slow, gl(-250.0, 60.0),  gl(-150.0, 50.0), gl(-900.0, -870.0)),
    ch!("NSGA",  "%",        "Narrow range level of SG-A",             LoopA, Slow, gl(30.0, 0.0),     gl(0.0, 0.0),    gl(-20.0, -20.0)),
    ch!("NSGB",  "%",        "Narrow range level of SG-B",             LoopB, Slow, gl(30.0, 0.0),     gl(0.0, 0.0),    gl(-20.0, -20.0)),
    ch!("WFWA",  "t/h",      "Flow SG-A feedwater",                    LoopA, Fast, gl(-700.0, 50.0),  gl(-100.0, 0.0), gl(-1600.0, -1600.0)),
    ch!("WFWB",  "t/h",      "Flow SG-B feedwater",                    LoopB, Fast, gl(-700.0, 50.0),  gl(-100.0, 0.0), gl(-1600.0, -1600.0)),
    ch!("VOL",   "m3",       "Volume RCS liquid",                      Plant, Slow, g(-40.0),          g(2.0),          g(-15.0)),
    ch!("WRCA",  "kt/h",     "Flow reactor coolant loop A",            LoopA, Fast, gl(-0.6, 0.0),     gl(0.0, 0.8),    gl(0.0, 0.8)),
    ch!("WRCB",  "kt/h",     "Flow reactor coolant loop B",            LoopB, Fast, gl(-0.6, 0.0),     gl(0.0, 0.8),    gl(0.0, 0.8)),
    ch!("WSTA",  "t/h",      "Steam flow of SG-A",                     LoopA, Fast, gl(-300.0, 50.0),  gl(-50.0, -50.0), gl(-1750.0, -1750.0)),
    ch!("WSTB",  "t/h",      "Steam flow of SG-B",                     LoopB, Fast, gl(-300.0, 50.0),  gl(-50.0, -50.0), gl(-1750.0, -1750.0)),
    ch!("LSGA",  "m",        "Level SG-A wide range",                  LoopA, Slow, gl(3.0, 0.0),      gl(0.0, 0.0),    gl(-2.0, -2.0)),
    ch!("LSGB",  "m",        "Level SG-B wide range",                  LoopB, Slow, gl(3.0, 0.0),      gl(0.0, 0.0),    gl(-2.0, -2.0)),
    ch!("VOID",  "%",        "Void of RCS",                            Plant, Slow, g(1.0),            g(2.0),          g(0.5)),
    ch!("WEC",   "t/h",      "Flow total ECCS",                        Plant, Fast, g(0.0),            g(0.0),          g(0.0)),
    ch!("LVPZ",  "%",        "Level pressurizer",                      Plant, Slow, g(-40.0),          g(5.0),          g(-25.0)),
    ch!("WTRA",  "t/h",      "Flow SG-A tube leak",                    LoopA, Fast, gl(100.0, 0.0),    gl(0.0, 0.0),    gl(0.0, 0.0)),
    ch!("WTRB",  "t/h",      "Flow SG-B tube leak",                    LoopB, Fast, gl(100.0, 0.0),    gl(0.0, 0.0),    gl(0.0, 0.0)),
    ch!("TF",    "degC",     "Temp average fuel",                      Plant, Slow, g(-30.0),          g(20.0),         g(-300.0)),
    ch!("TAVG",  "degC",     "RCS average temperature",                Plant, Slow, g(-12.0),          g(2.0),          g(-18.0)),
    ch!("PSGA",  "kg/cm2",   "Pressure steam generator A",             LoopA, Slow, gl(5.0, 0.0),      gl(0.0, 0.0),    gl(8.0, 8.0)),
    ch!("PSGB",  "kg/cm2",   "Pressure steam generator B",             LoopB, Slow, gl(5.0, 0.0),      gl(0.0, 0.0),    gl(8.0, 8.0)),
    ch!("WSPY",  "t/h",      "Flow pressurizer spray",                 Plant, Fast, g(-5.0),           g(15.0),         g(-5.0)),
    ch!("TFSUB", "degC",     "Temp submerged fuel average",            Plant, Slow, g(-28.0),          g(18.0),         g(-280.0)),
    ch!("HTR",   "MW",       "Power pressurizer heater",               Plant, Fast, g(1.0),            g(-0.4),         g(1.0)),
    ch!("PWR",   "%",        "Power core thermal",                     Plant, Fast, g(-8.0),           g(12.0),         g(-95.0)),
    ch!("RBLK",  "kg",       "Mass total leakage out of the building", Plant, Slow, g(500.0),          g(0.0),          g(0.0)),
    ch!("DNBR",  "-",        "Ratio departure from nucleate boiling",  Plant, Fast, g(-0.3),           g(-0.7),         g(1.5)),
    ch!("RHFL",  "%dk/k",    "Reactivity fuel",                        Plant, Slow, g(0.2),            g(-0.1),         g(0.9)),
    ch!("RHMT",  "%dk/k",    "Reactivity moderator temperature",       Plant, Slow, g(0.15),           g(0.0),          g(0.0)),
    ch!("RHRD",  "%dk/k",    "Reactivity rod",                         Plant, Fast, g(0.0),            g(0.0),          g(-6.0)),
    ch!("HUP",   "kJ/kg",    "Specific enthalpy pressurizer top",      Plant, Slow, g(-80.0),          g(10.0),         g(-60.0)),
    ch!("HLW",   "kJ/kg",    "Specific enthalpy RCS leak",             Plant, Slow, g(-60.0),          g(10.0),         g(-90.0)),
    ch!("TFAVG", "degC",     "Average fuel temperature",               Plant, Slow, g(-30.0),          g(20.0),         g(-300.0)),
    ch!("THA",   "degC",     "Temperature of hot leg A",               LoopA, Slow, gl(-20.0, -6.0),   gl(4.0, 2.0),    gl(-30.0, -20.0)),
    ch!("TCA2",  "degC",     "Temperature of cold leg A (second)",     LoopA, Slow, gl(-15.0, -5.0),   gl(2.0, 1.0),    gl(-12.0, -18.0)),
    ch!("THB",   "degC",     "Temperature of hot leg B",               LoopB, Slow, gl(-20.0, -6.0),   gl(4.0, 2.0),    gl(-30.0, -20.0)),
    ch!("TCB2",  "degC",     "Temperature of cold leg B (second)",     LoopB, Slow, gl(-15.0, -5.0),   gl(2.0, 1.0),    gl(-12.0, -18.0)),
    ch!("WCHG",  "t/h",      "Charging flow",                          Plant, Fast, g(60.0),           g(0.0),          g(20.0)),
];

pub(crate) const IDX_P: usize = 0;
pub(crate) const IDX_VOL: usize = 10;
pub(crate) const IDX_WRCA: usize = 11;
pub(crate) const IDX_VOID: usize = 17;
pub(crate) const IDX_WEC: usize = 18;
pub(crate) const IDX_LVPZ: usize = 19;

/// Full ECCS injection flow once the high-pressure injection signal latches.
pub(crate) const ECCS_MAX_FLOW: f64 = 150.0;

/// Locked rotor: loop A flow falls to this fraction of steady...
pub(crate) const ROTOR_RESIDUAL_FLOW: f64 = 0.10;
/// ...over this many seconds.
pub(crate) const ROTOR_COASTDOWN_S: f64 = 5.0;
/// Reactor trip on low flow, seconds after the seizure.
pub(crate) const ROTOR_TRIP_DELAY_S: f64 = 10.0;

/// Channel labels in corpus order.
pub fn channel_labels() -> Vec<&'static str> {
    CHANNELS.iter().map(|c| c.label).collect()
}

pub fn channel_index(label: &str) -> Option<usize> {
    CHANNELS.iter().position(|c| c.label == label)
}

/// Steady-state channel values for a plant configuration.
pub fn steady_values(config: &PlantConfig) -> Vec<f64> {
    let power_ratio = config.core_thermal_power / PlantConfig::default().core_thermal_power;
    let flow_ratio = config.core_flow / PlantConfig::default().core_flow;
    // Loop temperature rise scales with power over flow.
    let half_rise = 18.0 * power_ratio / flow_ratio;
    let t_hot = config.coolant_avg_temp + half_rise;
    let t_cold = config.coolant_avg_temp - half_rise;
    let sg_power = config.core_thermal_power / 2.0;
    let loop_flow_kt = config.core_flow / 2.0 / 1000.0;
    let feed = 1900.0 * power_ratio;

    CHANNELS
        .iter()
        .map(|c| match c.label {
            "P" => config.rcs_pressure,
            "TCA" | "TCB" | "TCA2" | "TCB2" => t_cold,
            "THA" | "THB" => t_hot,
            "QMWT" => config.core_thermal_power,
            "QMGA" | "QMGB" => sg_power,
            "NSGA" | "NSGB" => 50.0,
            "WFWA" | "WFWB" | "WSTA" | "WSTB" => feed,
            "VOL" => 250.0,
            "WRCA" | "WRCB" => loop_flow_kt,
            "LSGA" | "LSGB" => 12.0,
            "VOID" | "WEC" | "WTRA" | "WTRB" | "RBLK" => 0.0,
            "LVPZ" => 100.0 * config.pressurizer_level_frac,
            "TF" | "TFAVG" => 620.0 * power_ratio.sqrt(),
            "TFSUB" => 600.0 * power_ratio.sqrt(),
            "TAVG" => config.coolant_avg_temp,
            "PSGA" | "PSGB" => 68.0,
            "WSPY" => 5.0,
            "HTR" => 0.5,
            "PWR" => 100.0,
            "DNBR" => 2.0 / power_ratio,
            "RHFL" => -1.2,
            "RHMT" => -0.5,
            "RHRD" => -0.3,
            "HUP" => 2600.0,
            "HLW" => 1450.0,
            "WCHG" => config.charging_flow,
            other => unreachable!("no steady value for channel {other}"),
        })
        .collect()
}
