//! Generation adequacy indices: LOLE, LOLP and ELCC.
//!
//! Analytic results come from an exact capacity outage probability table; the Monte Carlo
//! estimator samples unit availabilities day by day and is used as an independent check.

mod elcc;
mod indices;
mod monte_carlo;
mod outage_table;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_model::GridCase;
use crate::report::write_csv;

pub use elcc::{compute_elcc, ElccCandidate, ElccOptions, ElccResult};
pub use indices::{compute_lole, compute_lolp};
pub use monte_carlo::{monte_carlo_lole, monte_carlo_units};
pub use outage_table::{
    build_outage_table, unit_models, OutageState, OutageTable, RenewableModel, TableOptions,
    UnitModel,
};

/// Conventional adequacy criterion, days per year. Used for report flagging only.
pub const LOLE_CRITERION: f64 = 0.1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AdequacyError {
    #[error("load profile must have 365 daily values (found {0})")]
    ProfileLength(usize),
    #[error("case has no load profiles")]
    NoProfile,
    #[error("penetration level {0} outside [0, 1]")]
    Level(f64),
    #[error("renewable {0} has no output_states for the multi-state model")]
    MissingOutputStates(String),
    #[error("unit {0} has an invalid outage distribution")]
    InvalidUnit(String),
    #[error("Monte Carlo needs at least one sample")]
    NoSamples,
    #[error("ELCC undefined: candidate has zero capacity")]
    ZeroCandidate,
    #[error("ELCC undefined: baseline LOLE is zero")]
    ZeroBaselineLole,
    #[error("ELCC search does not bracket the baseline LOLE")]
    NonBracketing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdequacyMethod {
    Analytic,
    MonteCarlo,
}

impl AdequacyMethod {
    pub fn label(self) -> &'static str {
        match self {
            AdequacyMethod::Analytic => "analytic",
            AdequacyMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyResult {
    pub penetration: f64,
    /// days/year
    pub lole: f64,
    pub lolp: f64,
    pub method: AdequacyMethod,
    /// days/year; present only for Monte Carlo results.
    pub mc_std_err: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub renewable_model: String,
}

impl AdequacyResult {
    pub fn meets_criterion(&self) -> bool {
        self.lole <= LOLE_CRITERION
    }
}

/// Analytic LOLE and LOLP of `case` with renewables firm at `penetration`.
pub fn analytic_indices(case: &GridCase, penetration: f64) -> Result<AdequacyResult, AdequacyError> {
    let profile = case.system_profile().ok_or(AdequacyError::NoProfile)?;
    let model = RenewableModel::Firm { penetration };
    let table = build_outage_table(&case.machines, &case.renewables, model)?;
    Ok(AdequacyResult {
        penetration,
        lole: compute_lole(&table, &profile)?,
        lolp: compute_lolp(&table, &profile)?,
        method: AdequacyMethod::Analytic,
        mc_std_err: None,
        samples: None,
        seed: None,
        renewable_model: model.label().into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum SweepStudy {
    Analytic,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Adequacy indices at each renewable level, each level computed independently.
pub fn penetration_sweep(
    case: &GridCase,
    levels: &[f64],
    study: SweepStudy,
) -> Result<Vec<AdequacyResult>, AdequacyError> {
    if let Some(bad) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(AdequacyError::Level(*bad));
    }
    levels
        .par_iter()
        .map(|&level| match study {
            SweepStudy::Analytic => analytic_indices(case, level),
            SweepStudy::MonteCarlo { samples, seed } => monte_carlo_lole(case, level, samples, seed),
        })
        .collect()
}

#[derive(Serialize)]
struct SweepRow {
    penetration: f64,
    lole: f64,
    lolp: f64,
    method: &'static str,
    std_err: Option<f64>,
}

/// Sweep table: penetration, lole, lolp, method, std_err.
pub fn sweep_csv(results: &[AdequacyResult]) -> String {
    write_csv(results.iter().map(|r| SweepRow {
        penetration: r.penetration,
        lole: r.lole,
        lolp: r.lolp,
        method: r.method.label(),
        std_err: r.mc_std_err,
    }))
}
