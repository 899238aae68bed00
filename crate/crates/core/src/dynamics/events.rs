use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::grid_model::GridCase;

/// Where a power disturbance enters the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionTarget {
    /// Mechanical power of a machine.
    Machine(String),
    /// Constant-current injection at a bus; positive is generation.
    Bus(String),
    /// Output of a renewable plant.
    Renewable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRef {
    Branch(String),
    Machine(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EventKind {
    PowerStep {
        target: InjectionTarget,
        mw: f64,
    },
    /// Linear change of `mw` spread over the event duration.
    PowerRamp {
        target: InjectionTarget,
        mw: f64,
    },
    /// Shunt fault at a bus, removed after the event duration. A zero impedance is a bolted fault.
    BusFault {
        bus: String,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        x: f64,
        /// Branch opened when the fault clears.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clear_branch: Option<String>,
    },
    ElementTrip {
        element: ElementRef,
    },
    RenewableDrop {
        plant: String,
        mw: f64,
    },
    RenewableRise {
        plant: String,
        mw: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub t_start: f64,
    /// Ramp or fault duration, s.
    #[serde(default)]
    pub duration: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl DisturbanceEvent {
    pub fn new(t_start: f64, duration: f64, kind: EventKind) -> Self {
        Self {
            t_start,
            duration,
            kind,
        }
    }

    /// Signed MW injection change and its target, for power-type events.
    pub(crate) fn injection(&self) -> Option<(InjectionTarget, f64)> {
        match &self.kind {
            EventKind::PowerStep { target, mw } | EventKind::PowerRamp { target, mw } => {
                Some((target.clone(), *mw))
            }
            EventKind::RenewableDrop { plant, mw } => {
                Some((InjectionTarget::Renewable(plant.clone()), -mw))
            }
            EventKind::RenewableRise { plant, mw } => {
                Some((InjectionTarget::Renewable(plant.clone()), *mw))
            }
            _ => None,
        }
    }

    pub fn validate(&self, case: &GridCase) -> Result<(), DynamicsError> {
        let missing = |what: &str, id: &str| DynamicsError::UnknownElement(format!("{what} {id}"));
        if !(self.t_start >= 0.0) || !(self.duration >= 0.0) {
            return Err(DynamicsError::InvalidEvent(
                "t_start and duration must be non-negative".into(),
            ));
        }
        if let Some((target, mw)) = self.injection() {
            if !mw.is_finite() {
                return Err(DynamicsError::InvalidEvent("non-finite magnitude".into()));
            }
            match &target {
                InjectionTarget::Machine(id) => {
                    case.machine(id).ok_or_else(|| missing("machine", id))?;
                }
                InjectionTarget::Bus(id) => {
                    case.bus_index(id).ok_or_else(|| missing("bus", id))?;
                }
                InjectionTarget::Renewable(id) => {
                    let p = case.renewable(id).ok_or_else(|| missing("renewable", id))?;
                    let tol = 1e-9 * p.nameplate.max(1.0);
                    if mw < 0.0 && -mw > p.output_mw() + tol {
                        return Err(DynamicsError::InvalidEvent(format!(
                            "drop of {} MW exceeds output {} MW of {id}",
                            -mw,
                            p.output_mw()
                        )));
                    }
                    if mw > 0.0 && mw > p.headroom_mw() + tol {
                        return Err(DynamicsError::InvalidEvent(format!(
                            "rise of {mw} MW exceeds headroom {} MW of {id}",
                            p.headroom_mw()
                        )));
                    }
                }
            }
        }
        match &self.kind {
            EventKind::BusFault {
                bus, clear_branch, ..
            } => {
                case.bus_index(bus).ok_or_else(|| missing("bus", bus))?;
                if let Some(b) = clear_branch {
                    case.branch(b).ok_or_else(|| missing("branch", b))?;
                }
                if !(self.duration > 0.0) {
                    return Err(DynamicsError::InvalidEvent(
                        "bus fault needs a positive clearing duration".into(),
                    ));
                }
            }
            EventKind::ElementTrip { element } => match element {
                ElementRef::Branch(id) => {
                    case.branch(id).ok_or_else(|| missing("branch", id))?;
                }
                ElementRef::Machine(id) => {
                    case.machine(id).ok_or_else(|| missing("machine", id))?;
                }
            },
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewableDirection {
    Drop,
    Rise,
}

/// Builds a ramp on a plant's output. A zero `ramp_duration` is a step.
pub fn renewable_event(
    case: &GridCase,
    plant: &str,
    direction: RenewableDirection,
    magnitude: f64,
    ramp_duration: f64,
    t_start: f64,
) -> Result<DisturbanceEvent, DynamicsError> {
    if !(magnitude >= 0.0) {
        return Err(DynamicsError::InvalidEvent("magnitude must be >= 0".into()));
    }
    let mw = match direction {
        RenewableDirection::Drop => -magnitude,
        RenewableDirection::Rise => magnitude,
    };
    let ev = DisturbanceEvent::new(
        t_start,
        ramp_duration,
        EventKind::PowerRamp {
            target: InjectionTarget::Renewable(plant.to_string()),
            mw,
        },
    );
    ev.validate(case)?;
    Ok(ev)
}
