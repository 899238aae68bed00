use serde::{Deserialize, Serialize};

use crate::steady_state::LimitReport;

/// Voltage excursion normalization, pu.
pub const VOLTAGE_NORMALIZATION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeverityWeights {
    pub voltage: f64,
    pub thermal: f64,
    pub margin: f64,
    /// Loadability margin at or above which the margin term vanishes.
    pub margin_ref: f64,
    /// Score assigned to diverged or infeasible outcomes; larger than any finite score.
    pub divergence_penalty: f64,
}

impl Default for SeverityWeights {
    fn default() -> Self {
        Self {
            voltage: 1.0,
            thermal: 1.0,
            margin: 1.0,
            margin_ref: 0.2,
            divergence_penalty: 1e6,
        }
    }
}

/// Unweighted terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityScore {
    pub voltage_term: f64,
    pub thermal_term: f64,
    pub margin_term: f64,
    pub total: f64,
    pub diverged: bool,
}

impl SeverityScore {
    pub fn diverged(weights: &SeverityWeights) -> Self {
        Self {
            voltage_term: 0.0,
            thermal_term: 0.0,
            margin_term: 0.0,
            total: weights.divergence_penalty,
            diverged: true,
        }
    }
}

/// Scores a solved post-contingency state. `margin` is the loadability margin, or `None` when
/// it was not computed (the margin term is then zero).
pub fn severity_index(
    limits: &LimitReport,
    margin: Option<f64>,
    weights: &SeverityWeights,
) -> SeverityScore {
    let voltage_term = limits
        .voltage_violations
        .iter()
        .map(|v| v.excess().max(0.0) / VOLTAGE_NORMALIZATION)
        .fold(0.0, |a, b| a + b);
    let thermal_term = limits
        .thermal_violations
        .iter()
        .map(|t| (t.loading - 1.0).max(0.0))
        .fold(0.0, |a, b| a + b);
    let margin_term = match margin {
        Some(m) if weights.margin_ref > 0.0 => (1.0 - m / weights.margin_ref).max(0.0),
        _ => 0.0,
    };
    let total = weights.voltage * voltage_term + weights.thermal * thermal_term + weights.margin * margin_term;
    if !total.is_finite() {
        return SeverityScore::diverged(weights);
    }
    SeverityScore {
        voltage_term,
        thermal_term,
        margin_term,
        total: total.min(weights.divergence_penalty),
        diverged: false,
    }
}
