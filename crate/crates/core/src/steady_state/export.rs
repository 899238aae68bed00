use serde::Serialize;

use super::limits::{branch_loadings, LimitReport};
use super::power_flow::PowerFlowSolution;
use crate::grid_model::GridCase;
use crate::report::write_csv;

#[derive(Serialize)]
struct BusRow<'a> {
    bus: &'a str,
    vm_pu: f64,
    va_rad: f64,
    p_injection_mw: f64,
    q_injection_mvar: f64,
}

#[derive(Serialize)]
struct BranchRow<'a> {
    branch: &'a str,
    from_bus: &'a str,
    to_bus: &'a str,
    p_from_mw: f64,
    q_from_mvar: f64,
    p_to_mw: f64,
    q_to_mvar: f64,
    loading: f64,
}

/// One row per bus.
pub fn bus_csv(sol: &PowerFlowSolution) -> String {
    write_csv((0..sol.bus_ids.len()).map(|i| BusRow {
        bus: &sol.bus_ids[i],
        vm_pu: sol.vm[i],
        va_rad: sol.va[i],
        p_injection_mw: sol.p_injection[i],
        q_injection_mvar: sol.q_injection[i],
    }))
}

/// One row per branch, with loading against the case ratings.
pub fn branch_csv(case: &GridCase, sol: &PowerFlowSolution) -> String {
    let loadings = branch_loadings(case, sol);
    write_csv(sol.branches.iter().zip(loadings).map(|(b, loading)| BranchRow {
        branch: &b.id,
        from_bus: &b.from_bus,
        to_bus: &b.to_bus,
        p_from_mw: b.p_from,
        q_from_mvar: b.q_from,
        p_to_mw: b.p_to,
        q_to_mvar: b.q_to,
        loading,
    }))
}

pub fn solution_json(sol: &PowerFlowSolution) -> String {
    serde_json::to_string_pretty(sol).expect("serializable")
}

pub fn limits_json(report: &LimitReport) -> String {
    serde_json::to_string_pretty(report).expect("serializable")
}
