use serde::{Deserialize, Serialize};

use super::simulate::DynamicTrace;
use super::DynamicsError;
use crate::grid_model::GridCase;

/// One breakpoint of a piecewise-linear band: (time since event, lower bound, upper bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub min: f64,
    pub max: f64,
}

impl EnvelopePoint {
    pub const fn new(t: f64, min: f64, max: f64) -> Self {
        Self { t, min, max }
    }
}

/// Voltage (pu) and frequency (Hz) bands a plant must ride through. Beyond the last point
/// the last bounds hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideThroughEnvelope {
    pub voltage: Vec<EnvelopePoint>,
    pub frequency: Vec<EnvelopePoint>,
}

impl Default for RideThroughEnvelope {
    /// Zero voltage tolerated for 0.15 s, linear recovery to 0.9 pu at 3 s; 57.0 to 61.8 Hz.
    /// Representative values, not taken from a particular grid code.
    fn default() -> Self {
        Self {
            voltage: vec![
                EnvelopePoint::new(0.0, 0.0, 1.2),
                EnvelopePoint::new(0.15, 0.0, 1.2),
                EnvelopePoint::new(3.0, 0.9, 1.2),
            ],
            frequency: vec![EnvelopePoint::new(0.0, 57.0, 61.8)],
        }
    }
}

fn check_curve(name: &str, pts: &[EnvelopePoint]) -> Result<(), DynamicsError> {
    if pts.is_empty() {
        return Err(DynamicsError::InvalidEnvelope(format!("{name} curve is empty")));
    }
    for w in pts.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(DynamicsError::InvalidEnvelope(format!(
                "{name} times must be strictly increasing"
            )));
        }
    }
    if let Some(p) = pts.iter().find(|p| !(p.min < p.max)) {
        return Err(DynamicsError::InvalidEnvelope(format!(
            "{name} min must be below max at t = {}",
            p.t
        )));
    }
    Ok(())
}

fn bounds_at(pts: &[EnvelopePoint], t: f64) -> (f64, f64) {
    if t <= pts[0].t {
        return (pts[0].min, pts[0].max);
    }
    for w in pts.windows(2) {
        if t <= w[1].t {
            let a = (t - w[0].t) / (w[1].t - w[0].t);
            return (
                w[0].min + a * (w[1].min - w[0].min),
                w[0].max + a * (w[1].max - w[0].max),
            );
        }
    }
    let last = pts[pts.len() - 1];
    (last.min, last.max)
}

impl RideThroughEnvelope {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        check_curve("voltage", &self.voltage)?;
        check_curve("frequency", &self.frequency)
    }

    pub fn voltage_bounds(&self, t: f64) -> (f64, f64) {
        bounds_at(&self.voltage, t)
    }

    pub fn frequency_bounds(&self, t: f64) -> (f64, f64) {
        bounds_at(&self.frequency, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RideThroughQuantity {
    Voltage,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeBound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RideThroughViolation {
    /// Absolute trace time, s.
    pub time: f64,
    pub quantity: RideThroughQuantity,
    pub bound: EnvelopeBound,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideThroughResult {
    pub plant: String,
    pub bus: String,
    pub passed: bool,
    pub first_violation: Option<RideThroughViolation>,
}

/// Checks the voltage at each monitored plant's bus and the COI frequency against the
/// envelope from `event_time` onward. Bounds are inclusive.
pub fn check_ride_through(
    trace: &DynamicTrace,
    envelope: &RideThroughEnvelope,
    monitored: &[(String, String)],
    event_time: f64,
) -> Result<Vec<RideThroughResult>, DynamicsError> {
    envelope.validate()?;
    monitored
        .iter()
        .map(|(plant, bus)| {
            let b = trace
                .bus_position(bus)
                .ok_or_else(|| DynamicsError::UnknownElement(format!("bus {bus}")))?;
            let mut first = None;
            for (k, &t) in trace.time.iter().enumerate() {
                let since = t - event_time;
                if since < -1e-9 {
                    continue;
                }
                let since = since.max(0.0);
                let v = trace.voltage[k][b];
                let (vlo, vhi) = envelope.voltage_bounds(since);
                let f = trace.coi_frequency[k];
                let (flo, fhi) = envelope.frequency_bounds(since);
                let checks = [
                    (RideThroughQuantity::Voltage, v, vlo, vhi),
                    (RideThroughQuantity::Frequency, f, flo, fhi),
                ];
                for (quantity, value, lo, hi) in checks {
                    let hit = if value < lo {
                        Some((EnvelopeBound::Lower, lo))
                    } else if value > hi {
                        Some((EnvelopeBound::Upper, hi))
                    } else {
                        None
                    };
                    if let Some((bound, limit)) = hit {
                        first = Some(RideThroughViolation {
                            time: t,
                            quantity,
                            bound,
                            value,
                            limit,
                        });
                        break;
                    }
                }
                if first.is_some() {
                    break;
                }
            }
            Ok(RideThroughResult {
                plant: plant.clone(),
                bus: bus.clone(),
                passed: first.is_none(),
                first_violation: first,
            })
        })
        .collect()
}

/// (plant id, bus id) pairs for every renewable plant in the case.
pub fn renewable_monitors(case: &GridCase) -> Vec<(String, String)> {
    case.renewables
        .iter()
        .map(|r| (r.id.clone(), r.bus.clone()))
        .collect()
}
