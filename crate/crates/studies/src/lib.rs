//! Batch study orchestration for gridplan: configuration parsing, study dispatch and
//! report emission.

pub mod config;
pub mod output;
pub mod run;

use std::fmt::Write as _;
use std::path::Path;

use gridplan_core::grid_model::{parse_case, validate, CaseError, GridCase, Violation};
use thiserror::Error;

pub use config::{StudyConfig, StudyKind, StudyParams, WORKERS_ENV};
pub use output::{Artifact, Manifest, MANIFEST_NAME};
pub use run::{run_study, RunOutcome};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Case(CaseError),
    #[error("{0}")]
    Execution(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl StudyError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StudyError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Outcome of `validate`: parse failure, or the (possibly empty) violation list.
pub fn check_case_file(path: &Path) -> Result<Vec<Violation>, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let case = parse_case(&text)?;
    Ok(validate(&case))
}

/// Counts, capacities and aggregate inertia of a case.
pub fn describe(case: &GridCase) -> String {
    let mut s = String::new();
    if let Some(name) = &case.name {
        let _ = writeln!(s, "case: {name}");
    }
    let _ = writeln!(
        s,
        "{} buses, {} branches, {} machines, {} renewables",
        case.buses.len(),
        case.branches.len(),
        case.machines.len(),
        case.renewables.len()
    );
    let _ = writeln!(s, "conventional capacity: {} MW", case.conventional_capacity());
    let _ = writeln!(s, "renewable nameplate: {} MW", case.renewable_nameplate());
    let _ = writeln!(s, "aggregate inertia: {} MVA·s", case.aggregate_inertia());
    let _ = writeln!(s, "total load: {} MW", case.total_load());
    let _ = writeln!(s, "system frequency: {} Hz, base {} MVA", case.system_frequency, case.base_mva);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridplan_core::grid_model::case_from_str;

    fn wscc9() -> GridCase {
        case_from_str(include_str!("../../core/fixtures/wscc9.json")).unwrap()
    }

    #[test]
    fn describe_counts() {
        let text = describe(&wscc9());
        assert!(text.contains("9 buses, 9 branches, 3 machines, 1 renewables"), "{text}");
        assert!(text.contains("renewable nameplate: 60 MW"));
    }

    #[test]
    fn single_machine_inertia() {
        let mut c = wscc9();
        c.machines.truncate(1);
        c.machines[0].h = 5.0;
        c.machines[0].s_rated = 100.0;
        c.renewables.clear();
        let text = describe(&c);
        assert!(text.contains("aggregate inertia: 500 MVA·s"), "{text}");
        assert!(text.contains("renewable nameplate: 0 MW"));
    }

    #[test]
    fn adequacy_requires_seed() {
        let cfg = StudyConfig::parse(
            r#"{"case": "c.json", "kind": "adequacy", "params": {"samples": 10}, "output_dir": "out"}"#,
        )
        .unwrap();
        let err = cfg.params().unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(StudyConfig::parse(r#"{"case": "c", "kind": "weather", "output_dir": "o"}"#).is_err());
    }

    #[test]
    fn dangling_references_are_named() {
        let case = wscc9();
        let cfg = StudyConfig::parse(
            r#"{"case": "c", "kind": "security", "output_dir": "o",
                "params": {"contingencies": [{"id": "x", "kind": "multiple", "outages": [{"branch": "L99"}]}]}}"#,
        )
        .unwrap();
        let err = cfg.params().unwrap().validate(&case).unwrap_err().to_string();
        assert!(err.contains("L99"), "{err}");

        let cfg = StudyConfig::parse(
            r#"{"case": "c", "kind": "smallsignal", "output_dir": "o",
                "params": {"intermittency": {"plant": "W1", "sizes": [10], "horizon": 5}}}"#,
        )
        .unwrap();
        let err = cfg.params().unwrap().validate(&case).unwrap_err().to_string();
        assert!(err.contains("20"), "{err}");
    }
}
