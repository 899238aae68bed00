//! Network data model, renewable plant abstraction and case-file ingestion.
//!
//! Cases are JSON documents with top-level keys `buses`, `branches`, `machines`,
//! `renewables` and `profiles`, versioned by `format_version`. Loading validates and
//! rejects; nothing is repaired.

mod types;
mod validate;

use std::path::Path;

use thiserror::Error;

pub use types::*;
pub use validate::{bus_components, is_connected, validate, Violation};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read case {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed case: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid case: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("penetration {0} outside [0, 1]")]
    Penetration(f64),
}

/// Parses a case document without validating it.
pub fn parse_case(text: &str) -> Result<GridCase, CaseError> {
    Ok(serde_json::from_str(text)?)
}

/// Parses and validates a case document.
pub fn case_from_str(text: &str) -> Result<GridCase, CaseError> {
    let case = parse_case(text)?;
    let violations = validate(&case);
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(CaseError::Invalid(violations))
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<GridCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    case_from_str(&text)
}

pub fn case_to_string(case: &GridCase) -> String {
    serde_json::to_string_pretty(case).expect("case serialization is infallible")
}

/// Returns a copy of `case` with every renewable plant dispatched at `fraction` of nameplate.
pub fn set_penetration(case: &GridCase, fraction: f64) -> Result<GridCase, CaseError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CaseError::Penetration(fraction));
    }
    let mut out = case.clone();
    for r in &mut out.renewables {
        r.output_fraction = fraction;
    }
    Ok(out)
}

/// The standard sweep grid 0, 0.1, …, 1.0.
pub fn default_penetration_levels() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
pub(crate) mod test_cases {
    use super::*;

    pub fn two_bus(load_mw: f64, x: f64) -> GridCase {
        parse_case(&format!(
            r#"{{
                "buses": [
                    {{"id": "B1", "base_kv": 230, "kind": "slack"}},
                    {{"id": "B2", "base_kv": 230, "kind": "pq", "load_p": {load_mw}}}
                ],
                "branches": [
                    {{"id": "L1", "from_bus": "B1", "to_bus": "B2", "x": {x}, "thermal_rating": 500}}
                ],
                "machines": [
                    {{"id": "G1", "bus": "B1", "s_rated": 500, "h": 5, "p_set": 0, "p_max": 400, "xd_t": 0.2}}
                ]
            }}"#
        ))
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wind(kind: &str, coupling: f64) -> GridCase {
        let mut c = test_cases::two_bus(100.0, 0.1);
        let mut text = case_to_string(&c);
        text = text.replacen(
            "\"renewables\": []",
            &format!(
                r#""renewables": [{{"id": "W1", "bus": "B2", "nameplate": 1000, "kind": "{kind}", "inertia_coupling": {coupling}}}]"#
            ),
            1,
        );
        c = parse_case(&text).unwrap();
        c
    }

    #[test]
    fn minimal_two_bus_case_loads() {
        let c = test_cases::two_bus(100.0, 0.1);
        assert!(validate(&c).is_empty());
        assert_eq!(c.buses.len(), 2);
        assert_eq!(c.branches.len(), 1);
        assert_eq!(c.buses[0].v_min, DEFAULT_V_MIN);
        assert_eq!(c.system_frequency, 60.0);
    }

    #[test]
    fn dangling_branch_reference_is_named() {
        let mut c = test_cases::two_bus(100.0, 0.1);
        c.branches[0].to_bus = "B9".into();
        let text = case_to_string(&c);
        match case_from_str(&text) {
            Err(CaseError::Invalid(v)) => {
                assert!(v.iter().any(|v| v.rule.contains("B9")), "{v:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn zero_inertia_is_one_violation() {
        let mut c = test_cases::two_bus(100.0, 0.1);
        c.machines[0].h = 0.0;
        // aggregate inertia also drops to zero, so allow it to isolate the machine rule
        c.allow_zero_inertia = true;
        let v = validate(&c);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, "h > 0");
    }

    #[test]
    fn type4_with_coupling_is_rejected() {
        let v = validate(&wind("wind_type4", 0.5));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].rule.contains("decoupled"));
        assert!(validate(&wind("wind_type3", 0.5)).is_empty());
        assert_eq!(validate(&wind("solar_pv", 0.2)).len(), 1);
    }

    #[test]
    fn unknown_top_level_field_is_a_parse_error() {
        let text = r#"{"buses": [], "colour": "blue"}"#;
        assert!(matches!(parse_case(text), Err(CaseError::Parse(_))));
    }

    #[test]
    fn duplicate_and_disconnected_are_reported() {
        let mut c = test_cases::two_bus(100.0, 0.1);
        c.buses.push(Bus {
            id: "B3".into(),
            base_kv: 230.0,
            kind: BusKind::Pq,
            v_set: 1.0,
            v_min: 0.95,
            v_max: 1.05,
            load_p: 0.0,
            load_q: 0.0,
        });
        c.machines.push(c.machines[0].clone());
        let v = validate(&c);
        assert!(v.iter().any(|v| v.rule == "duplicate id" && v.entity == "machine G1"));
        assert!(v.iter().any(|v| v.rule.contains("disconnected") && v.rule.contains("B3")));
    }

    #[test]
    fn profile_rules() {
        let mut c = test_cases::two_bus(100.0, 0.1);
        c.profiles.push(LoadProfile {
            bus: "B2".into(),
            daily_peaks: vec![1.0; 364],
            hourly: None,
        });
        assert_eq!(validate(&c).len(), 1);
        let mut hourly = vec![1.0; LoadProfile::HOURS];
        hourly[30] = 5.0;
        c.profiles[0] = LoadProfile {
            bus: "B2".into(),
            daily_peaks: vec![1.0; 365],
            hourly: Some(hourly),
        };
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("daily_peaks[1]"));
    }

    #[test]
    fn penetration_scales_output() {
        let c = wind("wind_type4", 0.0);
        let half = set_penetration(&c, 0.5).unwrap();
        assert_eq!(half.renewables[0].output_mw(), 500.0);
        assert_eq!(set_penetration(&c, 1.0).unwrap().renewables[0].output_mw(), 1000.0);
        assert_eq!(set_penetration(&c, 0.0).unwrap().renewables[0].output_mw(), 0.0);
        assert_eq!(c.renewables[0].output_fraction, 0.0);
        assert!(matches!(
            set_penetration(&c, 1.2),
            Err(CaseError::Penetration(_))
        ));
    }

    #[test]
    fn default_grid_has_eleven_levels() {
        let g = default_penetration_levels();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[10], 1.0);
    }
}
