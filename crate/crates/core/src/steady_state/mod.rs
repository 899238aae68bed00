//! Operating-point solution and screening against thermal and voltage limits.

mod export;
mod limits;
mod loadability;
mod network;
mod power_flow;

use thiserror::Error;

pub use export::{branch_csv, bus_csv, limits_json, solution_json};
pub use limits::{
    branch_loadings, check_limits, LimitReport, ThermalViolation, VoltageBound, VoltageViolation,
};
pub use loadability::{
    loadability_margin, scale_loads, LoadDirection, LoadabilityMargin, LoadabilityOptions,
};
pub use network::{build_ybus, scheduled_injections};
pub use power_flow::{
    flat_start, solve_ac, solve_dc, solve_power_flow, AcModel, BranchFlow, PowerFlowMethod,
    PowerFlowOptions, PowerFlowSolution,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PowerFlowError {
    #[error("case has no slack bus")]
    NoSlack,
    #[error("power flow did not converge after {iterations} iterations (max mismatch {max_mismatch:.3e} pu)")]
    NonConvergence { iterations: usize, max_mismatch: f64 },
    #[error("singular Jacobian at bus {bus}")]
    SingularJacobian { bus: String },
    #[error("solution is not converged")]
    NotConverged,
    #[error("base case infeasible: {0}")]
    BaseInfeasible(Box<PowerFlowError>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_model::test_cases::two_bus;
    use crate::grid_model::{parse_case, GridCase};
    use num_complex::Complex64;

    fn ring3() -> GridCase {
        parse_case(
            r#"{
            "buses": [
                {"id": "A", "base_kv": 230, "kind": "slack", "v_set": 1.02},
                {"id": "B", "base_kv": 230, "kind": "pv", "v_set": 1.01, "load_p": 40, "load_q": 10},
                {"id": "C", "base_kv": 230, "kind": "pq", "load_p": 150, "load_q": 45}
            ],
            "branches": [
                {"id": "AB", "from_bus": "A", "to_bus": "B", "r": 0.01, "x": 0.08, "b_shunt": 0.02, "thermal_rating": 200},
                {"id": "AC", "from_bus": "A", "to_bus": "C", "r": 0.02, "x": 0.12, "b_shunt": 0.03, "thermal_rating": 200},
                {"id": "BC", "from_bus": "B", "to_bus": "C", "r": 0.015, "x": 0.1, "b_shunt": 0.01, "thermal_rating": 200}
            ],
            "machines": [
                {"id": "G1", "bus": "A", "s_rated": 300, "h": 4, "p_set": 100, "p_max": 300, "xd_t": 0.25},
                {"id": "G2", "bus": "B", "s_rated": 150, "h": 3, "p_set": 90, "p_max": 150, "xd_t": 0.25}
            ]
        }"#,
        )
        .unwrap()
    }

    /// Bus injections rebuilt branch by branch, independent of the admittance matrix.
    fn injections_by_branch(case: &GridCase, sol: &PowerFlowSolution) -> Vec<Complex64> {
        let mut s = vec![Complex64::new(0.0, 0.0); case.buses.len()];
        for br in &case.branches {
            let f = case.bus_index(&br.from_bus).unwrap();
            let t = case.bus_index(&br.to_bus).unwrap();
            let vf = Complex64::from_polar(sol.vm[f], sol.va[f]);
            let vt = Complex64::from_polar(sol.vm[t], sol.va[t]);
            let z = Complex64::new(br.r, br.x);
            let i_series = (vf - vt) / z;
            let i_f = i_series + Complex64::new(0.0, br.b_shunt / 2.0) * vf;
            let i_t = -i_series + Complex64::new(0.0, br.b_shunt / 2.0) * vt;
            s[f] += vf * i_f.conj();
            s[t] += vt * i_t.conj();
        }
        s
    }

    #[test]
    fn dc_two_bus_closed_form() {
        let c = two_bus(100.0, 0.1);
        let sol = solve_power_flow(&c, PowerFlowMethod::DcLinear).unwrap();
        assert!((sol.va[1] + 0.1).abs() < 1e-12);
        assert!((sol.branches[0].p_from - 100.0).abs() < 1e-9);
        assert_eq!(sol.branches[0].p_to, -sol.branches[0].p_from);
        assert!(sol.converged);
        assert_eq!(sol.losses(), 0.0);
    }

    #[test]
    fn zero_injection_gives_flat_solution() {
        let c = two_bus(0.0, 0.1);
        for m in [PowerFlowMethod::AcNewton, PowerFlowMethod::DcLinear] {
            let sol = solve_power_flow(&c, m).unwrap();
            assert!(sol.va.iter().all(|a| *a == 0.0));
            assert!(sol.branches.iter().all(|b| b.p_from == 0.0 && b.p_to == 0.0));
        }
    }

    #[test]
    fn ac_ring_satisfies_power_balance_by_independent_check() {
        let c = ring3();
        let sol = solve_power_flow(&c, PowerFlowMethod::AcNewton).unwrap();
        assert!(sol.converged && sol.max_mismatch <= 1e-6);
        let (p, q) = scheduled_injections(&c);
        let s = injections_by_branch(&c, &sol);
        for i in 1..3 {
            assert!((s[i].re - p[i]).abs() < 1e-6, "P at bus {i}");
        }
        assert!((s[2].im - q[2]).abs() < 1e-6);
        assert_eq!(sol.va[0], 0.0);
        // generation = load + losses
        let gen = sol.slack_p + 90.0;
        assert!((gen - 190.0 - sol.losses()).abs() < 1e-4);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let c = ring3();
        let model = AcModel::new(&c).unwrap();
        let va = vec![0.0, -0.05, -0.11];
        let vm = vec![1.02, 1.01, 0.97];
        let jac = model.jacobian(&va, &vm);
        let x0 = model.gather(&va, &vm);
        let h = 1e-6;
        for k in 0..x0.len() {
            let (mut a1, mut m1, mut a2, mut m2) = (va.clone(), vm.clone(), va.clone(), vm.clone());
            let mut xp = x0.clone();
            xp[k] += h;
            model.scatter(&xp, &mut a1, &mut m1);
            let mut xm = x0.clone();
            xm[k] -= h;
            model.scatter(&xm, &mut a2, &mut m2);
            let fp = model.mismatch(&a1, &m1);
            let fm = model.mismatch(&a2, &m2);
            for r in 0..x0.len() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                let an = jac[(r, k)];
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "J[{r},{k}] {an} vs {fd}");
            }
        }
    }

    #[test]
    fn limits_report_lists_violations() {
        let c = ring3();
        let sol = solve_power_flow(&c, PowerFlowMethod::AcNewton).unwrap();
        let r = check_limits(&c, &sol).unwrap();
        assert!(r.is_feasible(), "{r:?}");

        let mut tight = c.clone();
        let loading = branch_loadings(&c, &sol)[1];
        tight.branches[1].thermal_rating /= 1.2 / loading;
        let r = check_limits(&tight, &sol).unwrap();
        assert_eq!(r.thermal_violations.len(), 1);
        assert!((r.thermal_violations[0].loading - 1.2).abs() < 1e-12);

        let mut low = sol.clone();
        low.vm[2] = 0.93;
        let r = check_limits(&c, &low).unwrap();
        assert_eq!(r.voltage_violations.len(), 1);
        assert_eq!(r.voltage_violations[0].bound, VoltageBound::Lower);
        assert!((r.worst_voltage_dev - 0.02).abs() < 1e-12);

        low.converged = false;
        assert_eq!(check_limits(&c, &low), Err(PowerFlowError::NotConverged));
    }

    #[test]
    fn nonconvergence_is_reported() {
        // far beyond the 500 MW transfer limit
        let c = two_bus(900.0, 0.1);
        match solve_power_flow(&c, PowerFlowMethod::AcNewton) {
            Err(PowerFlowError::NonConvergence { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loadability_of_two_bus_matches_transfer_limit() {
        // unity power factor load through a lossless line: P_max = V²/(2x) = 5 pu
        let c = two_bus(100.0, 0.1);
        let m = loadability_margin(&c, &LoadDirection::uniform(), &Default::default()).unwrap();
        assert!(!m.capped);
        let lambda = m.margin + 1.0;
        assert!((lambda - 5.0).abs() / 5.0 < 0.01, "λ* = {lambda}");
    }

    #[test]
    fn loadability_at_the_nose_is_near_zero() {
        let c = two_bus(499.0, 0.1);
        let m = loadability_margin(&c, &LoadDirection::uniform(), &Default::default()).unwrap();
        assert!(m.margin < 0.01, "{m:?}");
    }

    #[test]
    fn unloaded_system_hits_the_cap() {
        let c = two_bus(0.0, 0.1);
        let opts = LoadabilityOptions::default();
        let m = loadability_margin(&c, &LoadDirection::uniform(), &opts).unwrap();
        assert!(m.capped);
        assert_eq!(m.margin, opts.lambda_cap - 1.0);
        assert!(m.to_string().starts_with(">="));
    }

    #[test]
    fn infeasible_base_is_an_error() {
        let c = two_bus(900.0, 0.1);
        assert!(matches!(
            loadability_margin(&c, &LoadDirection::uniform(), &Default::default()),
            Err(PowerFlowError::BaseInfeasible(_))
        ));
    }

    #[test]
    fn csv_exports_have_one_row_per_element() {
        let c = ring3();
        let sol = solve_power_flow(&c, PowerFlowMethod::AcNewton).unwrap();
        assert_eq!(bus_csv(&sol).lines().count(), 4);
        let b = branch_csv(&c, &sol);
        assert_eq!(b.lines().count(), 4);
        assert!(b.starts_with("branch,from_bus,to_bus"));
        let back: PowerFlowSolution = serde_json::from_str(&solution_json(&sol)).unwrap();
        assert_eq!(back, sol);
    }
}
