use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::grid_model::{validate, GovernorParams, GridCase};
use crate::linalg::inverse_complex;
use crate::steady_state::{build_ybus, solve_ac, PowerFlowOptions, PowerFlowSolution};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Rotor state of one classical machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    /// rad
    pub delta: f64,
    /// Speed deviation from synchronous, rad/s.
    pub omega: f64,
    /// Internal EMF magnitude, pu.
    pub e_internal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MachineData {
    pub id: String,
    pub bus: usize,
    pub h: f64,
    pub s_rated: f64,
    pub damping: f64,
    /// Transient reactance on the system base.
    pub x: f64,
    pub governor: Option<GovernorParams>,
    pub agc_participation: f64,
}

impl MachineData {
    pub fn inertia(&self) -> f64 {
        self.h * self.s_rated
    }
}

/// Network reduced to the machine internal nodes.
///
/// Machine currents are `y_red * E + k * I_bus`; bus voltages are `z_bb * I_bus + w * E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    pub y_red: DMatrix<Complex64>,
    pub k: DMatrix<Complex64>,
    pub z_bb: DMatrix<Complex64>,
    pub w: DMatrix<Complex64>,
}

impl ReducedNetwork {
    pub fn machine_currents(&self, e: &[Complex64], i_bus: &[Complex64]) -> Vec<Complex64> {
        (0..self.y_red.nrows())
            .map(|i| {
                let mut s = ZERO;
                for (j, ej) in e.iter().enumerate() {
                    s += self.y_red[(i, j)] * ej;
                }
                for (b, ib) in i_bus.iter().enumerate() {
                    if *ib != ZERO {
                        s += self.k[(i, b)] * ib;
                    }
                }
                s
            })
            .collect()
    }

    pub fn bus_voltages(&self, e: &[Complex64], i_bus: &[Complex64]) -> Vec<Complex64> {
        (0..self.z_bb.nrows())
            .map(|b| {
                let mut s = ZERO;
                for (c, ic) in i_bus.iter().enumerate() {
                    if *ic != ZERO {
                        s += self.z_bb[(b, c)] * ic;
                    }
                }
                for (j, ej) in e.iter().enumerate() {
                    s += self.w[(b, j)] * ej;
                }
                s
            })
            .collect()
    }
}

/// Switching state of the network during a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub branch_out: Vec<bool>,
    pub machine_out: Vec<bool>,
    /// Extra shunt admittance per bus (faults), pu.
    pub shunt: Vec<Complex64>,
}

impl Topology {
    pub fn intact(case: &GridCase) -> Self {
        Self {
            branch_out: vec![false; case.branches.len()],
            machine_out: vec![false; case.machines.len()],
            shunt: vec![ZERO; case.buses.len()],
        }
    }
}

/// Operating point of a case prepared for time-domain and modal analysis.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub case: GridCase,
    pub power_flow: PowerFlowSolution,
    pub states: Vec<MachineState>,
    pub network: ReducedNetwork,
    /// Mechanical power per machine, MW.
    pub p_mech: Vec<f64>,
    /// Machine terminal output from the power flow, MW and MVAr.
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub(crate) machines: Vec<MachineData>,
    pub(crate) load_admittance: Vec<Complex64>,
    pub(crate) v0: Vec<Complex64>,
    pub(crate) renewable_bus: Vec<usize>,
}

/// Solves the power flow, places each machine's EMF behind its transient reactance and
/// reduces the network to the internal nodes.
pub fn init_equilibrium(case: &GridCase) -> Result<Equilibrium, DynamicsError> {
    let violations = validate(case);
    if !violations.is_empty() {
        return Err(DynamicsError::InvalidCase(violations));
    }
    let opts = PowerFlowOptions {
        tolerance: 1e-10,
        max_iterations: 30,
    };
    let pf = solve_ac(case, &opts, None)?;
    let base = case.base_mva;
    let n = case.buses.len();

    let mut ren_p = vec![0.0; n];
    let mut renewable_bus = Vec::with_capacity(case.renewables.len());
    for r in &case.renewables {
        let b = case.bus_index(&r.bus).expect("validated bus");
        ren_p[b] += r.output_mw();
        renewable_bus.push(b);
    }

    let machines: Vec<MachineData> = case
        .machines
        .iter()
        .map(|m| MachineData {
            id: m.id.clone(),
            bus: case.bus_index(&m.bus).expect("validated bus"),
            h: m.h,
            s_rated: m.s_rated,
            damping: m.damping,
            x: m.xd_t * base / m.s_rated,
            governor: m.governor.clone(),
            agc_participation: m.agc_participation,
        })
        .collect();

    let mut p_gen = vec![0.0; machines.len()];
    let mut q_gen = vec![0.0; machines.len()];
    for (b, bus) in case.buses.iter().enumerate() {
        let p_req = pf.p_injection[b] + bus.load_p - ren_p[b];
        let q_req = pf.q_injection[b] + bus.load_q;
        let here: Vec<usize> = (0..machines.len()).filter(|&i| machines[i].bus == b).collect();
        if here.is_empty() {
            if p_req.abs() > 1e-6 || q_req.abs() > 1e-6 {
                return Err(DynamicsError::NoMachineAtBus(bus.id.clone()));
            }
            continue;
        }
        let s_sum: f64 = here.iter().map(|&i| machines[i].s_rated).sum();
        let p_set: f64 = here.iter().map(|&i| case.machines[i].p_set).sum();
        let q_set: f64 = here.iter().map(|&i| case.machines[i].q_set).sum();
        for &i in &here {
            let share = machines[i].s_rated / s_sum;
            p_gen[i] = case.machines[i].p_set + (p_req - p_set) * share;
            q_gen[i] = case.machines[i].q_set + (q_req - q_set) * share;
        }
    }

    let v0: Vec<Complex64> = (0..n).map(|b| pf.voltage(b)).collect();
    let load_admittance: Vec<Complex64> = case
        .buses
        .iter()
        .zip(&v0)
        .map(|(bus, v)| Complex64::new(bus.load_p, -bus.load_q) / base / v.norm_sqr())
        .collect();

    let states: Vec<MachineState> = machines
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let v = v0[m.bus];
            let current = (Complex64::new(p_gen[i], q_gen[i]) / base / v).conj();
            let e = v + Complex64::new(0.0, m.x) * current;
            MachineState {
                delta: e.arg(),
                omega: 0.0,
                e_internal: e.norm(),
            }
        })
        .collect();

    let mut eq = Equilibrium {
        case: case.clone(),
        power_flow: pf,
        states,
        network: ReducedNetwork {
            y_red: DMatrix::zeros(0, 0),
            k: DMatrix::zeros(0, 0),
            z_bb: DMatrix::zeros(0, 0),
            w: DMatrix::zeros(0, 0),
        },
        p_mech: Vec::new(),
        p_gen,
        q_gen,
        machines,
        load_admittance,
        v0,
        renewable_bus,
    };
    eq.network = eq
        .build_network(&Topology::intact(case))
        .ok_or(DynamicsError::SingularNetwork { time: 0.0 })?;
    let delta: Vec<f64> = eq.states.iter().map(|s| s.delta).collect();
    eq.p_mech = eq.electrical_power(&delta);
    Ok(eq)
}

impl Equilibrium {
    pub fn machine_ids(&self) -> Vec<String> {
        self.machines.iter().map(|m| m.id.clone()).collect()
    }

    pub fn bus_ids(&self) -> Vec<String> {
        self.case.buses.iter().map(|b| b.id.clone()).collect()
    }

    pub fn base_mva(&self) -> f64 {
        self.case.base_mva
    }

    pub fn system_frequency(&self) -> f64 {
        self.case.system_frequency
    }

    pub fn synchronous_speed(&self) -> f64 {
        self.case.synchronous_speed()
    }

    /// H·S_n per machine, MVA·s.
    pub fn inertias(&self) -> Vec<f64> {
        self.machines.iter().map(|m| m.inertia()).collect()
    }

    pub fn dampings(&self) -> Vec<f64> {
        self.machines.iter().map(|m| m.damping * m.s_rated).collect()
    }

    /// Internal EMF phasors for the given rotor angles.
    pub fn emfs(&self, delta: &[f64]) -> Vec<Complex64> {
        self.states
            .iter()
            .zip(delta)
            .map(|(s, d)| Complex64::from_polar(s.e_internal, *d))
            .collect()
    }

    /// Unit current per MW injected at each bus, referred to the pre-disturbance voltage.
    pub(crate) fn current_per_mw(&self, bus: usize) -> Complex64 {
        Complex64::new(1.0 / self.case.base_mva, 0.0) / self.v0[bus].conj()
    }

    /// Bus current injections of the renewables at their scheduled output, COI-rotated by `rot`.
    pub(crate) fn base_injections(&self, rot: Complex64) -> Vec<Complex64> {
        let mut i_bus = vec![ZERO; self.case.buses.len()];
        for (r, &b) in self.case.renewables.iter().zip(&self.renewable_bus) {
            i_bus[b] += self.current_per_mw(b) * r.output_mw() * rot;
        }
        i_bus
    }

    /// Inertia-weighted mean of the angles of the machines in `active`.
    pub(crate) fn coi_weights(&self, active: &[bool]) -> Vec<f64> {
        let total: f64 = self
            .machines
            .iter()
            .zip(active)
            .filter(|(_, a)| **a)
            .map(|(m, _)| m.inertia())
            .sum();
        self.machines
            .iter()
            .zip(active)
            .map(|(m, a)| if *a && total > 0.0 { m.inertia() / total } else { 0.0 })
            .collect()
    }

    pub(crate) fn coi_angle(weights: &[f64], delta: &[f64]) -> f64 {
        weights.iter().zip(delta).map(|(w, d)| w * d).sum()
    }

    pub(crate) fn initial_coi_angle(&self) -> f64 {
        let delta: Vec<f64> = self.states.iter().map(|s| s.delta).collect();
        Self::coi_angle(&self.coi_weights(&vec![true; self.machines.len()]), &delta)
    }

    /// Electrical output per machine (MW) of the intact network at rotor angles `delta`.
    pub fn electrical_power(&self, delta: &[f64]) -> Vec<f64> {
        let weights = self.coi_weights(&vec![true; self.machines.len()]);
        let rot = Complex64::from_polar(
            1.0,
            Self::coi_angle(&weights, delta) - self.initial_coi_angle(),
        );
        let i_bus = self.base_injections(rot);
        self.power_from(&self.network, delta, &i_bus)
    }

    pub(crate) fn power_from(
        &self,
        net: &ReducedNetwork,
        delta: &[f64],
        i_bus: &[Complex64],
    ) -> Vec<f64> {
        let e = self.emfs(delta);
        let im = net.machine_currents(&e, i_bus);
        e.iter()
            .zip(&im)
            .map(|(e, i)| (e * i.conj()).re * self.case.base_mva)
            .collect()
    }

    /// Kron-reduced network for a switching state; `None` when the bus admittance matrix is singular.
    pub fn build_network(&self, topo: &Topology) -> Option<ReducedNetwork> {
        let n = self.case.buses.len();
        let m = self.machines.len();
        let mut reduced = self.case.clone();
        reduced.branches = self
            .case
            .branches
            .iter()
            .zip(&topo.branch_out)
            .filter(|(_, out)| !**out)
            .map(|(b, _)| b.clone())
            .collect();
        let mut ybb = build_ybus(&reduced);
        for b in 0..n {
            ybb[(b, b)] += self.load_admittance[b] + topo.shunt[b];
        }
        let y_m: Vec<Complex64> = self
            .machines
            .iter()
            .zip(&topo.machine_out)
            .map(|(md, out)| {
                if *out {
                    ZERO
                } else {
                    Complex64::new(0.0, -1.0 / md.x)
                }
            })
            .collect();
        let mut ybm = DMatrix::from_element(n, m, ZERO);
        for (i, md) in self.machines.iter().enumerate() {
            ybb[(md.bus, md.bus)] += y_m[i];
            ybm[(md.bus, i)] = -y_m[i];
        }
        let z_bb = inverse_complex(&ybb)?;
        let ymb = ybm.transpose();
        let w = -(&z_bb * &ybm);
        let mut y_red = &ymb * &w;
        for i in 0..m {
            y_red[(i, i)] += y_m[i];
        }
        let k = &ymb * &z_bb;
        if y_red.iter().chain(z_bb.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return None;
        }
        Some(ReducedNetwork { y_red, k, z_bb, w })
    }
}

#[cfg(test)]
pub(crate) mod test_cases {
    use crate::grid_model::*;

    pub fn bus(id: &str, kind: BusKind, load_p: f64, load_q: f64) -> Bus {
        Bus {
            id: id.into(),
            base_kv: 230.0,
            kind,
            v_set: 1.0,
            v_min: DEFAULT_V_MIN,
            v_max: DEFAULT_V_MAX,
            load_p,
            load_q,
        }
    }

    pub fn line(id: &str, f: &str, t: &str, r: f64, x: f64) -> Branch {
        Branch {
            id: id.into(),
            from_bus: f.into(),
            to_bus: t.into(),
            r,
            x,
            b_shunt: 0.0,
            thermal_rating: 1000.0,
        }
    }

    pub fn machine(id: &str, bus: &str, s: f64, h: f64, p: f64) -> ConventionalMachine {
        ConventionalMachine {
            id: id.into(),
            bus: bus.into(),
            s_rated: s,
            h,
            p_set: p,
            q_set: 0.0,
            p_max: s,
            p_min: -s,
            xd_t: 0.2,
            damping: 0.0,
            forced_outage_rate: 0.0,
            governor: None,
            agc_participation: 0.0,
        }
    }

    pub fn case(buses: Vec<Bus>, branches: Vec<Branch>, machines: Vec<ConventionalMachine>) -> GridCase {
        GridCase {
            format_version: CASE_FORMAT_VERSION,
            name: None,
            system_frequency: 60.0,
            base_mva: 100.0,
            buses,
            branches,
            machines,
            renewables: vec![],
            profiles: vec![],
            allow_zero_inertia: false,
        }
    }

    /// Generator at B2 feeding an effectively infinite bus B1 through one line.
    pub fn smib(p: f64, x_line: f64) -> GridCase {
        let mut inf = machine("INF", "B1", 1e5, 1e4, 0.0);
        inf.xd_t = 1e-3;
        let mut g = machine("G", "B2", 200.0, 4.0, p);
        g.xd_t = 0.3;
        case(
            vec![bus("B1", BusKind::Slack, 0.0, 0.0), bus("B2", BusKind::Pv, 0.0, 0.0)],
            vec![line("L1", "B1", "B2", 0.0, x_line)],
            vec![inf, g],
        )
    }

    /// Three machines on a lossless ring with reactive-only loads.
    pub fn lossless_three() -> GridCase {
        let mut g1 = machine("G1", "B1", 300.0, 6.0, 0.0);
        g1.xd_t = 0.25;
        let g2 = machine("G2", "B2", 200.0, 4.0, 60.0);
        let mut g3 = machine("G3", "B3", 150.0, 3.0, 40.0);
        g3.xd_t = 0.3;
        let mut b2 = bus("B2", BusKind::Pv, 0.0, 0.0);
        b2.v_set = 1.01;
        let mut b3 = bus("B3", BusKind::Pv, 0.0, 0.0);
        b3.v_set = 0.99;
        case(
            vec![bus("B1", BusKind::Slack, 0.0, 0.0), b2, b3, bus("B4", BusKind::Pq, 0.0, 30.0)],
            vec![
                line("L14", "B1", "B4", 0.0, 0.08),
                line("L24", "B2", "B4", 0.0, 0.1),
                line("L34", "B3", "B4", 0.0, 0.12),
                line("L12", "B1", "B2", 0.0, 0.2),
            ],
            vec![g1, g2, g3],
        )
    }

    /// Two identical machines, one per bus, feeding a load at the midpoint bus.
    pub fn symmetric_pair() -> GridCase {
        case(
            vec![
                bus("B1", BusKind::Slack, 0.0, 0.0),
                bus("B2", BusKind::Pv, 0.0, 0.0),
                bus("B3", BusKind::Pq, 160.0, 20.0),
            ],
            vec![line("L13", "B1", "B3", 0.0, 0.05), line("L23", "B2", "B3", 0.0, 0.05)],
            vec![machine("G1", "B1", 200.0, 5.0, 80.0), machine("G2", "B2", 200.0, 5.0, 80.0)],
        )
    }
}
