//! Effective load carrying capability by LOLE equivalence.
//!
//! On a discrete outage table LOLE is a step function of load, so "the load increase that
//! restores the baseline LOLE" is an interval rather than a point. Both the baseline and
//! the augmented system are therefore measured at the right edge of that interval: the
//! largest uniform load increase whose LOLE does not exceed the baseline value. The ELCC
//! is the difference of the two edges over the candidate's nameplate. A perfectly reliable
//! unit shifts the table rigidly and scores exactly 100%.

use serde::{Deserialize, Serialize};

use super::indices::lole_shifted;
use super::outage_table::{unit_models, OutageTable, RenewableModel, TableOptions, UnitModel};
use super::AdequacyError;
use crate::grid_model::{ConventionalMachine, GridCase, LoadProfile, RenewablePlant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElccCandidate {
    Machine(ConventionalMachine),
    /// Enters as a firm two-state unit at its current output fraction.
    Plant(RenewablePlant),
}

impl ElccCandidate {
    pub fn nameplate(&self) -> f64 {
        match self {
            ElccCandidate::Machine(m) => m.p_max,
            ElccCandidate::Plant(p) => p.nameplate,
        }
    }

    fn unit(&self) -> UnitModel {
        match self {
            ElccCandidate::Machine(m) => UnitModel::from_machine(m),
            ElccCandidate::Plant(p) => {
                UnitModel::two_state(&p.id, p.output_mw(), p.forced_outage_rate)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElccOptions {
    /// Bisection tolerance on the load increase, MW.
    pub tolerance_mw: f64,
    pub renewables: RenewableModel,
}

impl Default for ElccOptions {
    fn default() -> Self {
        Self {
            tolerance_mw: 0.1,
            renewables: RenewableModel::FirmAsDispatched,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElccResult {
    /// Percent of the candidate's nameplate.
    pub elcc_percent: f64,
    /// Extra load carried at baseline reliability, MW.
    pub load_carrying_mw: f64,
    pub baseline_lole: f64,
}

/// Largest shift (within `tol`) with LOLE at most `target`, searched over `[0, hi]`.
pub(crate) fn max_load_shift(
    table: &OutageTable,
    peaks: &[f64],
    target: f64,
    tol: f64,
) -> Result<f64, AdequacyError> {
    let slack = 1e-12 * LoadProfile::DAYS as f64;
    let ok = |shift: f64| lole_shifted(table, peaks, shift) <= target + slack;
    let min_load = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    let mut hi = (table.total_capacity - min_load).max(0.0) + 1.0;
    if !ok(lo) || ok(hi) {
        return Err(AdequacyError::NonBracketing);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn compute_elcc(
    case: &GridCase,
    candidate: &ElccCandidate,
    opts: &ElccOptions,
) -> Result<ElccResult, AdequacyError> {
    let nameplate = candidate.nameplate();
    if !(nameplate > 0.0) {
        return Err(AdequacyError::ZeroCandidate);
    }
    let profile = case.system_profile().ok_or(AdequacyError::NoProfile)?;
    let units = unit_models(&case.machines, &case.renewables, opts.renewables)?;
    let base = OutageTable::from_units(&units, TableOptions::default());
    let target = lole_shifted(&base, &profile.daily_peaks, 0.0);
    if target <= 0.0 {
        return Err(AdequacyError::ZeroBaselineLole);
    }
    let mut with = base.clone();
    let cand = candidate.unit();
    if cand.capacity > 0.0 {
        with.add_unit(&cand, TableOptions::default());
    }
    let base_edge = max_load_shift(&base, &profile.daily_peaks, target, opts.tolerance_mw)?;
    let with_edge = max_load_shift(&with, &profile.daily_peaks, target, opts.tolerance_mw)?;
    let carried = (with_edge - base_edge).max(0.0);
    Ok(ElccResult {
        elcc_percent: (carried / nameplate * 100.0).min(100.0),
        load_carrying_mw: carried,
        baseline_lole: target,
    })
}
