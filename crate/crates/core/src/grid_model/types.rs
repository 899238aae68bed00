use serde::{Deserialize, Serialize};

pub const DEFAULT_V_MIN: f64 = 0.95;
pub const DEFAULT_V_MAX: f64 = 1.05;
pub const DEFAULT_SYSTEM_FREQUENCY: f64 = 60.0;
pub const CASE_FORMAT_VERSION: u32 = 1;

fn default_v_min() -> f64 {
    DEFAULT_V_MIN
}
fn default_v_max() -> f64 {
    DEFAULT_V_MAX
}
fn default_v_set() -> f64 {
    1.0
}
fn default_frequency() -> f64 {
    DEFAULT_SYSTEM_FREQUENCY
}
fn default_base_mva() -> f64 {
    100.0
}
fn default_format_version() -> u32 {
    CASE_FORMAT_VERSION
}
fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub base_kv: f64,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (pu) held by slack and PV buses.
    #[serde(default = "default_v_set")]
    pub v_set: f64,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default)]
    pub load_p: f64,
    #[serde(default)]
    pub load_q: f64,
}

/// Transmission element in pi-equivalent form; impedances are per unit on the case base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_shunt: f64,
    /// MVA
    pub thermal_rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorParams {
    /// Per-unit frequency regulation (per-unit frequency change per per-unit power change).
    pub droop_r: f64,
    pub time_const: f64,
    /// Hz
    #[serde(default)]
    pub deadband: f64,
}

/// Synchronous machine in the classical representation.
///
/// `h`, `xd_t` and `damping` are on the machine's own MVA base (`s_rated`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionalMachine {
    pub id: String,
    pub bus: String,
    pub s_rated: f64,
    pub h: f64,
    pub p_set: f64,
    #[serde(default)]
    pub q_set: f64,
    pub p_max: f64,
    #[serde(default)]
    pub p_min: f64,
    pub xd_t: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub forced_outage_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governor: Option<GovernorParams>,
    #[serde(default)]
    pub agc_participation: f64,
}

impl ConventionalMachine {
    /// Stored kinetic energy at synchronous speed, MVA·s.
    pub fn inertia_mvas(&self) -> f64 {
        self.h * self.s_rated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewableKind {
    WindType3,
    WindType4,
    SolarPv,
}

impl RenewableKind {
    /// Full-converter plants have no electromechanical coupling to the grid.
    pub fn fully_decoupled(self) -> bool {
        matches!(self, RenewableKind::WindType4 | RenewableKind::SolarPv)
    }
}

/// One point of a discrete renewable output distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputState {
    pub fraction: f64,
    pub probability: f64,
}

/// Converter-interfaced plant, modelled as a controllable active-power injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewablePlant {
    pub id: String,
    pub bus: String,
    /// MW
    pub nameplate: f64,
    pub kind: RenewableKind,
    #[serde(default)]
    pub output_fraction: f64,
    #[serde(default)]
    pub inertia_coupling: f64,
    /// MW per Hz/s
    #[serde(default)]
    pub synthetic_inertia_gain: f64,
    /// Two-state availability used by the firm-capacity adequacy model.
    #[serde(default)]
    pub forced_outage_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_states: Option<Vec<OutputState>>,
}

impl RenewablePlant {
    pub fn output_mw(&self) -> f64 {
        self.nameplate * self.output_fraction
    }

    pub fn headroom_mw(&self) -> f64 {
        self.nameplate - self.output_mw()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadProfile {
    pub bus: String,
    /// 365 daily peak loads, MW.
    pub daily_peaks: Vec<f64>,
    /// Optional 8760 hourly loads, MW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hourly: Option<Vec<f64>>,
}

impl LoadProfile {
    pub const DAYS: usize = 365;
    pub const HOURS: usize = 8760;

    pub fn annual_peak(&self) -> f64 {
        self.daily_peaks.iter().copied().fold(0.0, f64::max)
    }

    /// Flat profile with the same peak every day.
    pub fn flat(bus: impl Into<String>, peak: f64) -> Self {
        Self {
            bus: bus.into(),
            daily_peaks: vec![peak; Self::DAYS],
            hourly: None,
        }
    }
}

/// Complete network case: topology, machines, renewable plants and load profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCase {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Hz
    #[serde(default = "default_frequency")]
    pub system_frequency: f64,
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub machines: Vec<ConventionalMachine>,
    #[serde(default)]
    pub renewables: Vec<RenewablePlant>,
    #[serde(default)]
    pub profiles: Vec<LoadProfile>,
    /// Permits a case without synchronous inertia; only meant for degenerate-case studies.
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_zero_inertia: bool,
}

impl GridCase {
    pub fn synchronous_speed(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.system_frequency
    }

    /// Σ H·S_n over conventional machines, MVA·s.
    pub fn aggregate_inertia(&self) -> f64 {
        self.machines.iter().map(ConventionalMachine::inertia_mvas).fold(0.0, |a, b| a + b)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn machine(&self, id: &str) -> Option<&ConventionalMachine> {
        self.machines.iter().find(|m| m.id == id)
    }

    pub fn renewable(&self, id: &str) -> Option<&RenewablePlant> {
        self.renewables.iter().find(|r| r.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    pub fn conventional_capacity(&self) -> f64 {
        self.machines.iter().map(|m| m.p_max).fold(0.0, |a, b| a + b)
    }

    pub fn renewable_nameplate(&self) -> f64 {
        self.renewables.iter().map(|r| r.nameplate).fold(0.0, |a, b| a + b)
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load_p).fold(0.0, |a, b| a + b)
    }

    /// System-level daily peaks: the day-by-day sum of every bus profile.
    pub fn system_profile(&self) -> Option<LoadProfile> {
        if self.profiles.is_empty() {
            return None;
        }
        let mut daily = vec![0.0; LoadProfile::DAYS];
        for p in &self.profiles {
            for (d, v) in daily.iter_mut().zip(&p.daily_peaks) {
                *d += v;
            }
        }
        Some(LoadProfile {
            bus: "system".into(),
            daily_peaks: daily,
            hourly: None,
        })
    }
}
