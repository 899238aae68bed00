use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::power_flow::{solve_ac, PowerFlowOptions};
use super::PowerFlowError;
use crate::grid_model::GridCase;

/// Per-bus load scaling pattern. Bus `b` carries `load_b · (1 + (λ − 1) · w_b)` at multiplier λ.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadDirection {
    /// Buses absent from the map keep weight `default_weight`.
    pub weights: BTreeMap<String, f64>,
    pub default_weight: f64,
}

impl LoadDirection {
    pub fn uniform() -> Self {
        Self {
            weights: BTreeMap::new(),
            default_weight: 1.0,
        }
    }

    pub fn weight(&self, bus: &str) -> f64 {
        self.weights.get(bus).copied().unwrap_or(self.default_weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadabilityOptions {
    pub step_factor: f64,
    pub tolerance: f64,
    /// Largest multiplier examined; reaching it reports the margin as "at least".
    pub lambda_cap: f64,
}

impl Default for LoadabilityOptions {
    fn default() -> Self {
        Self {
            step_factor: 1.5,
            tolerance: 1e-3,
            lambda_cap: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadabilityMargin {
    /// λ* − 1, where λ* is the largest multiplier at which the AC solution still converges.
    pub margin: f64,
    /// True when the search hit `lambda_cap`; the margin is then a lower bound.
    pub capped: bool,
}

impl std::fmt::Display for LoadabilityMargin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.capped {
            write!(f, ">= {:.3}", self.margin)
        } else {
            write!(f, "{:.3}", self.margin)
        }
    }
}

/// Case with every load moved to multiplier `lambda` along `direction`.
pub fn scale_loads(case: &GridCase, direction: &LoadDirection, lambda: f64) -> GridCase {
    let mut out = case.clone();
    for b in &mut out.buses {
        let k = 1.0 + (lambda - 1.0) * direction.weight(&b.id);
        b.load_p *= k;
        b.load_q *= k;
    }
    out
}

/// Distance to the voltage-collapse point, approximated by the first multiplier at which
/// Newton-Raphson stops converging. Geometric stepping brackets the nose, then bisection
/// narrows it. Each solve is warm-started from the last converged point.
pub fn loadability_margin(
    case: &GridCase,
    direction: &LoadDirection,
    opts: &LoadabilityOptions,
) -> Result<LoadabilityMargin, PowerFlowError> {
    let pf = PowerFlowOptions::default();
    let base = solve_ac(case, &pf, None).map_err(|e| PowerFlowError::BaseInfeasible(Box::new(e)))?;
    let mut warm = (base.va, base.vm);
    let mut lo = 1.0;
    let mut hi = None;

    let try_at = |lambda: f64, warm: &(Vec<f64>, Vec<f64>)| {
        solve_ac(
            &scale_loads(case, direction, lambda),
            &pf,
            Some((&warm.0, &warm.1)),
        )
        .ok()
    };

    while hi.is_none() {
        let next = (lo * opts.step_factor).min(opts.lambda_cap);
        match try_at(next, &warm) {
            Some(sol) => {
                lo = next;
                warm = (sol.va, sol.vm);
                if lo >= opts.lambda_cap {
                    return Ok(LoadabilityMargin {
                        margin: lo - 1.0,
                        capped: true,
                    });
                }
            }
            None => hi = Some(next),
        }
    }
    let mut hi = hi.unwrap();
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        match try_at(mid, &warm) {
            Some(sol) => {
                lo = mid;
                warm = (sol.va, sol.vm);
            }
            None => hi = mid,
        }
    }
    Ok(LoadabilityMargin {
        margin: lo - 1.0,
        capped: false,
    })
}
