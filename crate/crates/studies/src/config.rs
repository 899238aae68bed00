//! Study configuration documents.

use std::path::{Path, PathBuf};

use gridplan_core::dynamics::{DisturbanceEvent, FrequencyOptions, RideThroughEnvelope};
use gridplan_core::grid_model::{default_penetration_levels, GridCase};
use gridplan_core::security::{Contingency, Outage, SeverityWeights};
use gridplan_core::small_signal::{IntermittencyConfig, DEFAULT_DAMPING_FLOOR, MIN_STUDY_HORIZON};
use gridplan_core::steady_state::PowerFlowMethod;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::StudyError;

pub const WORKERS_ENV: &str = "GRIDPLAN_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Powerflow,
    Adequacy,
    Security,
    Dynamics,
    Smallsignal,
    FullSweep,
}

impl StudyKind {
    pub fn label(self) -> &'static str {
        match self {
            StudyKind::Powerflow => "powerflow",
            StudyKind::Adequacy => "adequacy",
            StudyKind::Security => "security",
            StudyKind::Dynamics => "dynamics",
            StudyKind::Smallsignal => "smallsignal",
            StudyKind::FullSweep => "full_sweep",
        }
    }
}

/// Raw configuration document. `params` is interpreted according to `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Relative paths resolve against the configuration file's directory.
    pub case: PathBuf,
    pub kind: StudyKind,
    #[serde(default = "empty_params")]
    pub params: Value,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn empty_params() -> Value {
    Value::Object(Default::default())
}

fn default_levels() -> Vec<f64> {
    default_penetration_levels()
}

fn default_samples() -> u64 {
    100_000
}

fn default_true() -> bool {
    true
}

fn default_top_k() -> usize {
    20
}

fn default_damping_floor() -> f64 {
    DEFAULT_DAMPING_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerflowParams {
    #[serde(default = "ac")]
    pub method: PowerFlowMethod,
    /// Renewable output fraction applied before solving; the case as written when absent.
    #[serde(default)]
    pub penetration: Option<f64>,
}

fn ac() -> PowerFlowMethod {
    PowerFlowMethod::AcNewton
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdequacyParams {
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_true")]
    pub monte_carlo: bool,
    /// Renewable plants whose ELCC is computed at their configured output.
    #[serde(default)]
    pub elcc_plants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityParams {
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub weights: SeverityWeights,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Explicit list; N-1 enumeration when absent.
    #[serde(default)]
    pub contingencies: Option<Vec<Contingency>>,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            weights: SeverityWeights::default(),
            top_k: default_top_k(),
            contingencies: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams {
    pub events: Vec<DisturbanceEvent>,
    #[serde(default)]
    pub penetration: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_true")]
    pub governors: bool,
    #[serde(default)]
    pub agc: bool,
    #[serde(default)]
    pub synthetic_inertia: bool,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub frequency: Option<FrequencyOptions>,
    #[serde(default)]
    pub envelope: Option<RideThroughEnvelope>,
}

fn default_horizon() -> f64 {
    20.0
}

fn default_step() -> f64 {
    0.005
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallSignalParams {
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_damping_floor")]
    pub damping_floor: f64,
    #[serde(default)]
    pub intermittency: Option<IntermittencyConfig>,
}

impl Default for SmallSignalParams {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            damping_floor: DEFAULT_DAMPING_FLOOR,
            intermittency: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullSweepParams {
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub weights: SeverityWeights,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_damping_floor")]
    pub damping_floor: f64,
    #[serde(default)]
    pub intermittency: Option<IntermittencyConfig>,
}

/// Parameters after kind-specific parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyParams {
    Powerflow(PowerflowParams),
    Adequacy(AdequacyParams),
    Security(SecurityParams),
    Dynamics(DynamicsParams),
    Smallsignal(SmallSignalParams),
    FullSweep(FullSweepParams),
}

fn parse_params<T: serde::de::DeserializeOwned>(kind: StudyKind, v: &Value) -> Result<T, StudyError> {
    serde_json::from_value(v.clone())
        .map_err(|e| StudyError::Config(format!("params for {} study: {e}", kind.label())))
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self, StudyError> {
        serde_json::from_str(text).map_err(|e| StudyError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StudyError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.case.is_relative() {
            cfg.case = base.join(&cfg.case);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<StudyParams, StudyError> {
        let p = &self.params;
        Ok(match self.kind {
            StudyKind::Powerflow => StudyParams::Powerflow(parse_params(self.kind, p)?),
            StudyKind::Adequacy => StudyParams::Adequacy(parse_params(self.kind, p)?),
            StudyKind::Security => StudyParams::Security(parse_params(self.kind, p)?),
            StudyKind::Dynamics => StudyParams::Dynamics(parse_params(self.kind, p)?),
            StudyKind::Smallsignal => StudyParams::Smallsignal(parse_params(self.kind, p)?),
            StudyKind::FullSweep => StudyParams::FullSweep(parse_params(self.kind, p)?),
        })
    }

    /// Worker count: explicit setting, then the environment variable, then rayon's default.
    pub fn resolved_workers(&self) -> Result<Option<usize>, StudyError> {
        if let Some(n) = self.workers {
            return Ok(Some(n));
        }
        match std::env::var(WORKERS_ENV) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| StudyError::Config(format!("{WORKERS_ENV} must be a whole number, got {s:?}"))),
            Err(_) => Ok(None),
        }
    }
}

fn check_levels(levels: &[f64]) -> Result<(), StudyError> {
    if levels.is_empty() {
        return Err(StudyError::Config("penetration levels must be non-empty".into()));
    }
    if let Some(l) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(StudyError::Config(format!("penetration level {l} outside [0, 1]")));
    }
    Ok(())
}

fn check_plant(case: &GridCase, id: &str) -> Result<(), StudyError> {
    case.renewable(id)
        .map(|_| ())
        .ok_or_else(|| StudyError::Config(format!("unknown renewable plant {id}")))
}

fn check_intermittency(case: &GridCase, cfg: &IntermittencyConfig) -> Result<(), StudyError> {
    check_plant(case, &cfg.plant)?;
    if !(cfg.horizon >= MIN_STUDY_HORIZON) {
        return Err(StudyError::Config(format!(
            "intermittency horizon {} s is below the {MIN_STUDY_HORIZON} s minimum",
            cfg.horizon
        )));
    }
    check_levels(&cfg.operating_points)
}

impl StudyParams {
    /// Checks value ranges and that every referenced element id exists in `case`.
    pub fn validate(&self, case: &GridCase) -> Result<(), StudyError> {
        match self {
            StudyParams::Powerflow(p) => {
                if let Some(l) = p.penetration {
                    check_levels(&[l])?;
                }
            }
            StudyParams::Adequacy(p) => {
                check_levels(&p.levels)?;
                if p.monte_carlo && p.samples == 0 {
                    return Err(StudyError::Config("samples must be positive".into()));
                }
                for id in &p.elcc_plants {
                    check_plant(case, id)?;
                }
            }
            StudyParams::Security(p) => {
                check_levels(&p.levels)?;
                for c in p.contingencies.iter().flatten() {
                    for o in &c.outages {
                        let (what, id, found) = match o {
                            Outage::Branch(id) => ("branch", id, case.branch(id).is_some()),
                            Outage::Machine(id) => ("machine", id, case.machine(id).is_some()),
                        };
                        if !found {
                            return Err(StudyError::Config(format!(
                                "contingency {} references unknown {what} {id}",
                                c.id
                            )));
                        }
                    }
                }
            }
            StudyParams::Dynamics(p) => {
                if let Some(l) = p.penetration {
                    check_levels(&[l])?;
                }
                for ev in &p.events {
                    ev.validate(case).map_err(|e| StudyError::Config(e.to_string()))?;
                }
                if let Some(env) = &p.envelope {
                    env.validate().map_err(|e| StudyError::Config(e.to_string()))?;
                }
            }
            StudyParams::Smallsignal(p) => {
                check_levels(&p.levels)?;
                if let Some(i) = &p.intermittency {
                    check_intermittency(case, i)?;
                }
            }
            StudyParams::FullSweep(p) => {
                check_levels(&p.levels)?;
                if p.samples == 0 {
                    return Err(StudyError::Config("samples must be positive".into()));
                }
                if let Some(i) = &p.intermittency {
                    check_intermittency(case, i)?;
                }
            }
        }
        Ok(())
    }
}
