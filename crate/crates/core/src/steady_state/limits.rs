use serde::{Deserialize, Serialize};

use super::power_flow::PowerFlowSolution;
use super::PowerFlowError;
use crate::grid_model::GridCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoltageBound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalViolation {
    pub branch: String,
    /// Apparent power at the more loaded end over the rating.
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageViolation {
    pub bus: String,
    pub magnitude: f64,
    pub bound: VoltageBound,
    pub limit: f64,
}

impl VoltageViolation {
    /// Distance outside the violated bound, pu.
    pub fn excess(&self) -> f64 {
        match self.bound {
            VoltageBound::Lower => self.limit - self.magnitude,
            VoltageBound::Upper => self.magnitude - self.limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub thermal_violations: Vec<ThermalViolation>,
    pub voltage_violations: Vec<VoltageViolation>,
    /// Largest branch loading, violating or not.
    pub worst_loading: f64,
    /// Largest excursion outside any bus's voltage band (0 when all are inside).
    pub worst_voltage_dev: f64,
}

impl LimitReport {
    pub fn is_feasible(&self) -> bool {
        self.thermal_violations.is_empty() && self.voltage_violations.is_empty()
    }
}

/// Per-branch loading fractions in case order.
pub fn branch_loadings(case: &GridCase, sol: &PowerFlowSolution) -> Vec<f64> {
    case.branches
        .iter()
        .zip(&sol.branches)
        .map(|(br, f)| f.max_apparent() / br.thermal_rating)
        .collect()
}

/// Screens a converged operating point against thermal ratings and voltage bands.
pub fn check_limits(
    case: &GridCase,
    sol: &PowerFlowSolution,
) -> Result<LimitReport, PowerFlowError> {
    if !sol.converged {
        return Err(PowerFlowError::NotConverged);
    }
    let loadings = branch_loadings(case, sol);
    let thermal_violations = case
        .branches
        .iter()
        .zip(&loadings)
        .filter(|(_, l)| **l > 1.0)
        .map(|(br, l)| ThermalViolation {
            branch: br.id.clone(),
            loading: *l,
        })
        .collect();
    let mut voltage_violations = Vec::new();
    for (b, &vm) in case.buses.iter().zip(&sol.vm) {
        let v = if vm < b.v_min {
            Some((VoltageBound::Lower, b.v_min))
        } else if vm > b.v_max {
            Some((VoltageBound::Upper, b.v_max))
        } else {
            None
        };
        if let Some((bound, limit)) = v {
            voltage_violations.push(VoltageViolation {
                bus: b.id.clone(),
                magnitude: vm,
                bound,
                limit,
            });
        }
    }
    let worst_voltage_dev = voltage_violations
        .iter()
        .map(VoltageViolation::excess)
        .fold(0.0, f64::max);
    Ok(LimitReport {
        thermal_violations,
        voltage_violations,
        worst_loading: loadings.iter().copied().fold(0.0, f64::max),
        worst_voltage_dev,
    })
}
