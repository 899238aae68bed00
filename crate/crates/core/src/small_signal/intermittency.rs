use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linearize, modes, ModeDescriptor, SmallSignalError, DEFAULT_DAMPING_FLOOR};
use crate::dynamics::{
    frequency_metrics, init_equilibrium, renewable_event, simulate_from_equilibrium,
    FrequencyOptions, RenewableDirection, SimOptions,
};
use crate::grid_model::{set_penetration, GridCase};

/// Shortest accepted horizon for renewable intermittency runs, s.
pub const MIN_STUDY_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntermittencyConfig {
    pub plant: String,
    /// MW
    pub sizes: Vec<f64>,
    pub directions: Vec<RenewableDirection>,
    /// Pre-disturbance output fractions of every renewable plant.
    pub operating_points: Vec<f64>,
    /// s
    pub horizon: f64,
    /// s
    pub step: f64,
    /// s; zero is a step change
    pub ramp_duration: f64,
    /// s
    pub event_time: f64,
    pub governors: bool,
    pub damping_floor: f64,
    pub frequency: FrequencyOptions,
    /// Keep every n-th step when scanning extrema.
    pub record_every: usize,
}

impl Default for IntermittencyConfig {
    fn default() -> Self {
        Self {
            plant: String::new(),
            sizes: Vec::new(),
            directions: vec![RenewableDirection::Drop, RenewableDirection::Rise],
            operating_points: crate::grid_model::default_penetration_levels(),
            horizon: MIN_STUDY_HORIZON,
            step: 0.005,
            ramp_duration: 0.0,
            event_time: 1.0,
            governors: true,
            damping_floor: DEFAULT_DAMPING_FLOOR,
            frequency: FrequencyOptions::default(),
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyRecord {
    pub operating_point: f64,
    pub direction: RenewableDirection,
    pub size_mw: f64,
    /// Present when the combination was not run.
    pub skipped: Option<String>,
    /// Hz
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    /// pu, over all buses after the event
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    /// Hz/s
    pub initial_rocof: Option<f64>,
    pub ufls_tripped: Option<bool>,
    pub min_damping_ratio: Option<f64>,
    pub worst_mode: Option<ModeDescriptor>,
    /// Reason the post-event operating point could not be re-linearized.
    pub modes_error: Option<String>,
    pub flagged: bool,
}

impl IntermittencyRecord {
    fn skipped(operating_point: f64, direction: RenewableDirection, size_mw: f64, reason: String) -> Self {
        Self {
            operating_point,
            direction,
            size_mw,
            skipped: Some(reason),
            f_min: None,
            f_max: None,
            v_min: None,
            v_max: None,
            initial_rocof: None,
            ufls_tripped: None,
            min_damping_ratio: None,
            worst_mode: None,
            modes_error: None,
            flagged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyReport {
    pub plant: String,
    pub horizon: f64,
    pub damping_floor: f64,
    pub records: Vec<IntermittencyRecord>,
}

impl IntermittencyReport {
    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| r.flagged).count()
    }
}

fn run_one(
    case: &GridCase,
    cfg: &IntermittencyConfig,
    point: f64,
    direction: RenewableDirection,
    size: f64,
) -> IntermittencyRecord {
    let skip = |reason: String| IntermittencyRecord::skipped(point, direction, size, reason);
    let at_point = match set_penetration(case, point) {
        Ok(c) => c,
        Err(e) => return skip(e.to_string()),
    };
    let event = match renewable_event(
        &at_point,
        &cfg.plant,
        direction,
        size,
        cfg.ramp_duration,
        cfg.event_time,
    ) {
        Ok(ev) => ev,
        Err(e) => return skip(e.to_string()),
    };
    let eq = match init_equilibrium(&at_point) {
        Ok(eq) => eq,
        Err(e) => return skip(e.to_string()),
    };
    let opts = SimOptions {
        horizon: cfg.horizon,
        step: cfg.step,
        governors: cfg.governors,
        agc: false,
        synthetic_inertia: false,
        record_every: cfg.record_every,
    };
    let trace = match simulate_from_equilibrium(&eq, std::slice::from_ref(&event), &opts) {
        Ok(t) => t,
        Err(e) => return skip(e.to_string()),
    };
    let metrics = match frequency_metrics(&trace, &cfg.frequency) {
        Ok(m) => m,
        Err(e) => return skip(e.to_string()),
    };
    let t_e = trace.event_time.unwrap_or(0.0);
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut f_min, mut f_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, t) in trace.time.iter().enumerate() {
        if *t + 1e-9 < t_e {
            continue;
        }
        for v in &trace.voltage[k] {
            v_min = v_min.min(*v);
            v_max = v_max.max(*v);
        }
        f_min = f_min.min(trace.coi_frequency[k]);
        f_max = f_max.max(trace.coi_frequency[k]);
    }

    // operating point after the output change
    let mut after = at_point.clone();
    if let Some(p) = after.renewables.iter_mut().find(|p| p.id == cfg.plant) {
        let delta = match direction {
            RenewableDirection::Drop => -size,
            RenewableDirection::Rise => size,
        };
        if p.nameplate > 0.0 {
            p.output_fraction = ((p.output_mw() + delta) / p.nameplate).clamp(0.0, 1.0);
        }
    }
    let (worst, modes_error) = match init_equilibrium(&after)
        .map_err(SmallSignalError::from)
        .and_then(|eq| modes(&linearize(&eq)))
    {
        Ok(analysis) => (analysis.worst_mode(), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let min_damping_ratio = worst.map(|m| m.damping_ratio);
    IntermittencyRecord {
        operating_point: point,
        direction,
        size_mw: size,
        skipped: None,
        f_min: Some(f_min),
        f_max: Some(f_max),
        v_min: Some(v_min),
        v_max: Some(v_max),
        initial_rocof: Some(metrics.initial_rocof),
        ufls_tripped: Some(metrics.ufls_tripped),
        min_damping_ratio,
        worst_mode: worst,
        flagged: min_damping_ratio.is_some_and(|z| z < cfg.damping_floor) || modes_error.is_some(),
        modes_error,
    }
}

/// Drop and rise events of each size at each pre-disturbance operating point, each simulated
/// for the full horizon and re-linearized at its post-event operating point.
pub fn intermittency_study(
    case: &GridCase,
    cfg: &IntermittencyConfig,
) -> Result<IntermittencyReport, SmallSignalError> {
    if !(cfg.horizon >= MIN_STUDY_HORIZON) {
        return Err(SmallSignalError::HorizonTooShort {
            requested: cfg.horizon,
            min: MIN_STUDY_HORIZON,
        });
    }
    if case.renewable(&cfg.plant).is_none() {
        return Err(SmallSignalError::InvalidStudy(format!(
            "unknown renewable plant {}",
            cfg.plant
        )));
    }
    if cfg.sizes.is_empty() || cfg.directions.is_empty() || cfg.operating_points.is_empty() {
        return Err(SmallSignalError::InvalidStudy(
            "sizes, directions and operating points must be non-empty".into(),
        ));
    }
    let mut combos = Vec::new();
    for &point in &cfg.operating_points {
        for &direction in &cfg.directions {
            for &size in &cfg.sizes {
                combos.push((point, direction, size));
            }
        }
    }
    let records = combos
        .par_iter()
        .map(|&(point, direction, size)| run_one(case, cfg, point, direction, size))
        .collect();
    Ok(IntermittencyReport {
        plant: cfg.plant.clone(),
        horizon: cfg.horizon,
        damping_floor: cfg.damping_floor,
        records,
    })
}

pub fn study_json(report: &IntermittencyReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
