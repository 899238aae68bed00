use serde::{Deserialize, Serialize};

use super::AdequacyError;
use crate::grid_model::{ConventionalMachine, RenewablePlant};

/// How renewable plants enter the capacity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum RenewableModel {
    /// Each plant is a two-state unit of `nameplate × penetration` MW with its own forced outage rate.
    Firm { penetration: f64 },
    /// Like `Firm`, using each plant's current `output_fraction`.
    FirmAsDispatched,
    /// Each plant follows its `output_states` distribution.
    MultiState,
}

impl RenewableModel {
    pub fn label(&self) -> &'static str {
        match self {
            RenewableModel::Firm { .. } | RenewableModel::FirmAsDispatched => "firm",
            RenewableModel::MultiState => "multi_state",
        }
    }
}

/// Discrete outage distribution of one generating unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitModel {
    pub id: String,
    pub capacity: f64,
    /// (MW on outage, probability), zero-probability states removed.
    pub states: Vec<(f64, f64)>,
}

impl UnitModel {
    pub fn two_state(id: impl Into<String>, capacity: f64, forced_outage_rate: f64) -> Self {
        let states = [(0.0, 1.0 - forced_outage_rate), (capacity, forced_outage_rate)]
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .collect();
        Self {
            id: id.into(),
            capacity,
            states,
        }
    }

    pub fn from_machine(m: &ConventionalMachine) -> Self {
        Self::two_state(&m.id, m.p_max, m.forced_outage_rate)
    }

    pub fn from_plant(r: &RenewablePlant, model: RenewableModel) -> Result<Self, AdequacyError> {
        match model {
            RenewableModel::Firm { penetration } => {
                if !(0.0..=1.0).contains(&penetration) {
                    return Err(AdequacyError::Level(penetration));
                }
                Ok(Self::two_state(&r.id, r.nameplate * penetration, r.forced_outage_rate))
            }
            RenewableModel::FirmAsDispatched => {
                Ok(Self::two_state(&r.id, r.output_mw(), r.forced_outage_rate))
            }
            RenewableModel::MultiState => {
                let states = r
                    .output_states
                    .as_ref()
                    .ok_or_else(|| AdequacyError::MissingOutputStates(r.id.clone()))?;
                Ok(Self {
                    id: r.id.clone(),
                    capacity: r.nameplate,
                    states: states
                        .iter()
                        .filter(|s| s.probability > 0.0)
                        .map(|s| (r.nameplate * (1.0 - s.fraction), s.probability))
                        .collect(),
                })
            }
        }
    }
}

/// Builds the unit list for a machine set and plant set. Zero-capacity units are dropped,
/// so a plant at 0% contributes nothing at all.
pub fn unit_models(
    machines: &[ConventionalMachine],
    renewables: &[RenewablePlant],
    model: RenewableModel,
) -> Result<Vec<UnitModel>, AdequacyError> {
    let mut units: Vec<UnitModel> = machines.iter().map(UnitModel::from_machine).collect();
    for r in renewables {
        units.push(UnitModel::from_plant(r, model)?);
    }
    for u in &units {
        let total: f64 = u.states.iter().map(|s| s.1).sum();
        let bad_state = u
            .states
            .iter()
            .any(|&(out, p)| !(p >= 0.0) || out < -MERGE_EPS || out > u.capacity + MERGE_EPS);
        if bad_state || (total - 1.0).abs() > 1e-9 {
            return Err(AdequacyError::InvalidUnit(u.id.clone()));
        }
    }
    units.retain(|u| u.capacity > 0.0);
    Ok(units)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageState {
    pub capacity_on_outage: f64,
    pub probability: f64,
}

/// Capacity outage probability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageTable {
    /// Strictly increasing capacities on outage.
    pub states: Vec<OutageState>,
    pub total_capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TableOptions {
    /// Snap capacities to multiples of this increment (MW). `None` keeps exact values.
    pub rounding_mw: Option<f64>,
}

/// Capacities closer than this are the same table row.
const MERGE_EPS: f64 = 1e-9;
/// Shortfall test slack, MW.
pub(crate) const LOAD_EPS: f64 = 1e-9;

impl OutageTable {
    /// Table of a system with no units.
    pub fn empty() -> Self {
        Self {
            states: vec![OutageState {
                capacity_on_outage: 0.0,
                probability: 1.0,
            }],
            total_capacity: 0.0,
        }
    }

    /// Exact convolution of independent unit outage distributions.
    pub fn from_units(units: &[UnitModel], opts: TableOptions) -> Self {
        let mut table = Self::empty();
        for u in units {
            table.add_unit(u, opts);
        }
        table
    }

    pub fn add_unit(&mut self, unit: &UnitModel, opts: TableOptions) {
        let snap = |c: f64| match opts.rounding_mw {
            Some(step) if step > 0.0 => (c / step).round() * step,
            _ => c,
        };
        let mut next: Vec<OutageState> = Vec::with_capacity(self.states.len() * unit.states.len());
        for s in &self.states {
            for &(out, p) in &unit.states {
                next.push(OutageState {
                    capacity_on_outage: snap(s.capacity_on_outage + out),
                    probability: s.probability * p,
                });
            }
        }
        next.sort_by(|a, b| a.capacity_on_outage.total_cmp(&b.capacity_on_outage));
        let mut merged: Vec<OutageState> = Vec::with_capacity(next.len());
        for s in next {
            if s.probability == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if (s.capacity_on_outage - last.capacity_on_outage).abs() <= MERGE_EPS => {
                    last.probability += s.probability;
                }
                _ => merged.push(s),
            }
        }
        self.states = merged;
        self.total_capacity += unit.capacity;
        debug_assert!((self.probability_sum() - 1.0).abs() <= 1e-9);
    }

    pub fn probability_sum(&self) -> f64 {
        self.states.iter().map(|s| s.probability).sum()
    }

    /// Probability that available capacity falls short of `load` MW.
    pub fn shortfall_probability(&self, load: f64) -> f64 {
        let p: f64 = self
            .states
            .iter()
            .filter(|s| self.total_capacity - s.capacity_on_outage < load - LOAD_EPS)
            .map(|s| s.probability)
            .sum();
        p.min(1.0)
    }
}

/// Capacity outage table for a machine set and plant set.
pub fn build_outage_table(
    machines: &[ConventionalMachine],
    renewables: &[RenewablePlant],
    model: RenewableModel,
) -> Result<OutageTable, AdequacyError> {
    let units = unit_models(machines, renewables, model)?;
    Ok(OutageTable::from_units(&units, TableOptions::default()))
}
