//! N-1 contingency enumeration, post-contingency screening and severity ranking.

mod contingency;
mod ranking;
mod severity;

use thiserror::Error;

use crate::grid_model::Violation;

pub use contingency::{
    apply_contingency, enumerate_n1, restore_contingency, Contingency, ContingencyKind,
    Infeasibility, Outage, PostContingency,
};
pub use ranking::{
    rank_contingencies, ranking_csv, ranking_json, LevelReport, RankedContingency, ScreenStage,
    SecurityOptions, SecurityReport,
};
pub use severity::{severity_index, SeverityScore, SeverityWeights, VOLTAGE_NORMALIZATION};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SecurityError {
    #[error("invalid case: {} violation(s)", .0.len())]
    InvalidCase(Vec<Violation>),
    #[error("contingency references unknown {0}")]
    UnknownElement(String),
    #[error("contingency {0} has no outages")]
    EmptyContingency(String),
    #[error("invalid penetration level: {0}")]
    InvalidLevel(String),
}
