use serde::{Deserialize, Serialize};

use super::SecurityError;
use crate::grid_model::{is_connected, BusKind, GridCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outage {
    Branch(String),
    Machine(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencyKind {
    BranchOutage,
    MachineOutage,
    /// User-supplied multi-element event.
    Multiple,
}

impl ContingencyKind {
    pub fn label(self) -> &'static str {
        match self {
            ContingencyKind::BranchOutage => "branch_outage",
            ContingencyKind::MachineOutage => "machine_outage",
            ContingencyKind::Multiple => "multiple",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub id: String,
    pub kind: ContingencyKind,
    pub outages: Vec<Outage>,
}

impl Contingency {
    pub fn branch(id: &str) -> Self {
        Self {
            id: format!("branch:{id}"),
            kind: ContingencyKind::BranchOutage,
            outages: vec![Outage::Branch(id.into())],
        }
    }

    pub fn machine(id: &str) -> Self {
        Self {
            id: format!("machine:{id}"),
            kind: ContingencyKind::MachineOutage,
            outages: vec![Outage::Machine(id.into())],
        }
    }

    pub fn multiple(id: impl Into<String>, outages: Vec<Outage>) -> Self {
        Self {
            id: id.into(),
            kind: ContingencyKind::Multiple,
            outages,
        }
    }
}

/// One contingency per branch (sorted by id), then one per machine (sorted by id).
pub fn enumerate_n1(case: &GridCase) -> Vec<Contingency> {
    let mut branches: Vec<&str> = case.branches.iter().map(|b| b.id.as_str()).collect();
    let mut machines: Vec<&str> = case.machines.iter().map(|m| m.id.as_str()).collect();
    branches.sort_unstable();
    machines.sort_unstable();
    branches
        .into_iter()
        .map(Contingency::branch)
        .chain(machines.into_iter().map(Contingency::machine))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum Infeasibility {
    /// The outage splits the network.
    Islanding,
    /// Remaining machines cannot pick up the lost dispatch (MW short).
    InsufficientHeadroom(f64),
    NoMachineLeft,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::Islanding => write!(f, "outage islands part of the network"),
            Infeasibility::InsufficientHeadroom(mw) => {
                write!(f, "remaining headroom is {mw} MW short of the lost dispatch")
            }
            Infeasibility::NoMachineLeft => write!(f, "no machine left in service"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PostContingency {
    Feasible(GridCase),
    Infeasible(Infeasibility),
}

pub(crate) fn check_elements(case: &GridCase, c: &Contingency) -> Result<(), SecurityError> {
    if c.outages.is_empty() {
        return Err(SecurityError::EmptyContingency(c.id.clone()));
    }
    for o in &c.outages {
        match o {
            Outage::Branch(id) if case.branch(id).is_none() => {
                return Err(SecurityError::UnknownElement(format!("branch {id}")))
            }
            Outage::Machine(id) if case.machine(id).is_none() => {
                return Err(SecurityError::UnknownElement(format!("machine {id}")))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Copy of `case` with the contingency's elements removed. Lost machine dispatch is spread
/// over the remaining machines in proportion to their headroom `p_max - p_set`; a PV bus
/// left without a machine becomes PQ, and if the slack bus loses its last machine the slack
/// role moves to the bus of the remaining machine with the largest `p_max`.
pub fn apply_contingency(case: &GridCase, c: &Contingency) -> Result<PostContingency, SecurityError> {
    check_elements(case, c)?;
    let mut out = case.clone();
    let mut lost = 0.0;
    for o in &c.outages {
        match o {
            Outage::Branch(id) => out.branches.retain(|b| &b.id != id),
            Outage::Machine(id) => {
                if let Some(pos) = out.machines.iter().position(|m| &m.id == id) {
                    lost += out.machines.remove(pos).p_set;
                }
            }
        }
    }
    if !is_connected(&out) {
        return Ok(PostContingency::Infeasible(Infeasibility::Islanding));
    }
    if out.machines.is_empty() && !case.machines.is_empty() {
        return Ok(PostContingency::Infeasible(Infeasibility::NoMachineLeft));
    }
    if lost != 0.0 {
        let headroom: Vec<f64> = out.machines.iter().map(|m| (m.p_max - m.p_set).max(0.0)).collect();
        let total: f64 = headroom.iter().sum();
        if total + 1e-9 < lost {
            return Ok(PostContingency::Infeasible(Infeasibility::InsufficientHeadroom(lost - total)));
        }
        if total > 0.0 {
            for (m, h) in out.machines.iter_mut().zip(&headroom) {
                m.p_set += lost * h / total;
            }
        }
    }
    let has_machine = |case: &GridCase, bus: &str| case.machines.iter().any(|m| m.bus == bus);
    let slack_orphaned = out
        .buses
        .iter()
        .any(|b| b.kind == BusKind::Slack && !has_machine(&out, &b.id));
    if slack_orphaned && !out.machines.is_empty() {
        let new_bus = out
            .machines
            .iter()
            .max_by(|a, b| a.p_max.total_cmp(&b.p_max))
            .map(|m| m.bus.clone())
            .expect("non-empty");
        for b in &mut out.buses {
            if b.kind == BusKind::Slack {
                b.kind = BusKind::Pq;
            }
        }
        if let Some(b) = out.buses.iter_mut().find(|b| b.id == new_bus) {
            b.kind = BusKind::Slack;
        }
    }
    let orphans: Vec<usize> = (0..out.buses.len())
        .filter(|&i| out.buses[i].kind == BusKind::Pv && !has_machine(&out, &out.buses[i].id))
        .collect();
    for i in orphans {
        out.buses[i].kind = BusKind::Pq;
    }
    Ok(PostContingency::Feasible(out))
}

/// Puts the contingency's elements back into `post`, restoring the original dispatch and bus
/// types from `original`.
pub fn restore_contingency(original: &GridCase, post: &GridCase, c: &Contingency) -> GridCase {
    let mut out = post.clone();
    for o in &c.outages {
        match o {
            Outage::Branch(id) => {
                if let Some(pos) = original.branches.iter().position(|b| &b.id == id) {
                    if out.branch(id).is_none() {
                        out.branches.insert(pos.min(out.branches.len()), original.branches[pos].clone());
                    }
                }
            }
            Outage::Machine(id) => {
                if let Some(pos) = original.machines.iter().position(|m| &m.id == id) {
                    if out.machine(id).is_none() {
                        out.machines.insert(pos.min(out.machines.len()), original.machines[pos].clone());
                    }
                }
            }
        }
    }
    for m in &mut out.machines {
        if let Some(orig) = original.machine(&m.id) {
            m.p_set = orig.p_set;
        }
    }
    for b in &mut out.buses {
        if let Some(i) = original.bus_index(&b.id) {
            b.kind = original.buses[i].kind;
        }
    }
    out
}
