//! Electromechanical time-domain simulation with the classical machine model.
//!
//! Machines are constant EMFs behind transient reactance, loads are constant impedances and
//! converter plants are current injections that follow the centre-of-inertia angle. The
//! network is Kron-reduced to the machine internal nodes and rebuilt on every switching event.

mod events;
mod frequency;
mod model;
mod ride_through;
mod simulate;

use serde::Serialize;
use thiserror::Error;

use crate::grid_model::{GridCase, Violation};
use crate::report::write_csv_records;
use crate::steady_state::PowerFlowError;

pub use events::{
    renewable_event, DisturbanceEvent, ElementRef, EventKind, InjectionTarget, RenewableDirection,
};
pub use frequency::{
    coi_rocof_law, inertial_deviation, frequency_metrics, FrequencyMetrics, FrequencyOptions,
    ROCOF_WINDOW, SETTLING_BAND,
};
pub use model::{init_equilibrium, Equilibrium, MachineState, ReducedNetwork, Topology};
pub use ride_through::{
    check_ride_through, renewable_monitors, EnvelopeBound, EnvelopePoint, RideThroughEnvelope,
    RideThroughQuantity, RideThroughResult, RideThroughViolation,
};
pub use simulate::{
    simulate, simulate_from_equilibrium, synthetic_inertia, DynamicTrace, SimOptions,
    AGC_TIME_CONST, BOLTED_FAULT_REACTANCE, MAX_STEP, ROCOF_FILTER_TC,
};

#[cfg(test)]
pub(crate) use model::test_cases;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error("invalid case: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidCase(Vec<Violation>),
    #[error("power flow failed: {0}")]
    PowerFlow(#[from] PowerFlowError),
    #[error("bus {0} needs generation but has no machine")]
    NoMachineAtBus(String),
    #[error("unknown {0}")]
    UnknownElement(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid simulation options: {0}")]
    InvalidOptions(String),
    #[error("network admittance matrix is singular at t = {time} s")]
    SingularNetwork { time: f64 },
    #[error("numerical blow-up after t = {time} s")]
    NumericBlowUp { time: f64 },
    #[error("aggregate inertia is zero")]
    ZeroInertia,
    #[error("no governor-equipped machine for primary response")]
    NoGovernor,
    #[error("AGC participation factors sum to zero")]
    NoAgcParticipation,
    #[error("invalid ride-through envelope: {0}")]
    InvalidEnvelope(String),
    #[error("trace is empty")]
    EmptyTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOptions {
    pub agc: bool,
    /// s
    pub step: f64,
    pub frequency: FrequencyOptions,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            agc: false,
            step: 0.005,
            frequency: FrequencyOptions::default(),
        }
    }
}

/// Simulates `event` with governor droop (and AGC when enabled) from the case equilibrium.
pub fn primary_secondary_response(
    case: &GridCase,
    event: &DisturbanceEvent,
    horizon: f64,
    control: &ControlOptions,
) -> Result<(DynamicTrace, FrequencyMetrics), DynamicsError> {
    if !case.machines.iter().any(|m| m.governor.is_some()) {
        return Err(DynamicsError::NoGovernor);
    }
    if control.agc && !(case.machines.iter().map(|m| m.agc_participation).sum::<f64>() > 0.0) {
        return Err(DynamicsError::NoAgcParticipation);
    }
    let eq = init_equilibrium(case)?;
    let opts = SimOptions {
        horizon,
        step: control.step,
        governors: true,
        agc: control.agc,
        synthetic_inertia: false,
        record_every: 1,
    };
    let trace = simulate_from_equilibrium(&eq, std::slice::from_ref(event), &opts)?;
    let metrics = frequency_metrics(&trace, &control.frequency)?;
    Ok((trace, metrics))
}

/// Trace table: time, delta and omega per machine, voltage per bus, COI frequency.
pub fn trace_csv(trace: &DynamicTrace) -> String {
    let mut header = vec!["time".to_string()];
    header.extend(trace.machine_ids.iter().map(|m| format!("delta_{m}")));
    header.extend(trace.machine_ids.iter().map(|m| format!("omega_{m}")));
    header.extend(trace.bus_ids.iter().map(|b| format!("v_{b}")));
    header.push("coi_frequency".into());
    let rows = (0..trace.len()).map(|k| {
        let mut row = vec![trace.time[k].to_string()];
        row.extend(trace.delta[k].iter().map(|v| v.to_string()));
        row.extend(trace.omega[k].iter().map(|v| v.to_string()));
        row.extend(trace.voltage[k].iter().map(|v| v.to_string()));
        row.push(trace.coi_frequency[k].to_string());
        row
    });
    write_csv_records(&header, rows)
}

#[derive(Serialize)]
struct Summary<'a> {
    step: f64,
    integrator: &'a str,
    horizon: f64,
    event_time: Option<f64>,
    events: &'a [DisturbanceEvent],
    metrics: &'a FrequencyMetrics,
}

/// Compact JSON summary of a run: metadata and frequency metrics only.
pub fn metrics_json(trace: &DynamicTrace, metrics: &FrequencyMetrics) -> String {
    let summary = Summary {
        step: trace.step,
        integrator: &trace.integrator,
        horizon: trace.time.last().copied().unwrap_or(0.0),
        event_time: trace.event_time,
        events: &trace.events,
        metrics,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}
