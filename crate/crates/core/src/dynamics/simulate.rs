use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::events::{DisturbanceEvent, ElementRef, EventKind, InjectionTarget};
use super::model::{Equilibrium, MachineState, ReducedNetwork, Topology};
use super::DynamicsError;
use crate::grid_model::RenewablePlant;

/// Largest accepted integration step, s.
pub const MAX_STEP: f64 = 0.01;
/// Time constant of the AGC integrator, s.
pub const AGC_TIME_CONST: f64 = 30.0;
/// Washout time constant of the ROCOF measurement used by synthetic inertia, s.
pub const ROCOF_FILTER_TC: f64 = 0.1;
/// Fault reactance used for a bolted fault, pu.
pub const BOLTED_FAULT_REACTANCE: f64 = 1e-6;
/// Droop assumed for the AGC frequency bias when no governor is in service.
const FALLBACK_BIAS_DROOP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// s
    pub horizon: f64,
    /// s
    pub step: f64,
    pub governors: bool,
    pub agc: bool,
    pub synthetic_inertia: bool,
    /// Keep every n-th integration step in the trace.
    pub record_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            step: 0.005,
            governors: false,
            agc: false,
            synthetic_inertia: false,
            record_every: 1,
        }
    }
}

/// Time series produced by [`simulate`]. Per-sample rows are indexed `[sample][element]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicTrace {
    pub time: Vec<f64>,
    pub machine_ids: Vec<String>,
    pub bus_ids: Vec<String>,
    /// rad
    pub delta: Vec<Vec<f64>>,
    /// rad/s deviation from synchronous speed
    pub omega: Vec<Vec<f64>>,
    /// pu
    pub voltage: Vec<Vec<f64>>,
    /// Hz
    pub coi_frequency: Vec<f64>,
    pub system_frequency: f64,
    pub step: f64,
    pub integrator: String,
    pub events: Vec<DisturbanceEvent>,
    /// First event time after snapping to the integration grid.
    pub event_time: Option<f64>,
}

impl DynamicTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn bus_position(&self, bus: &str) -> Option<usize> {
        self.bus_ids.iter().position(|b| b == bus)
    }

    pub fn machine_position(&self, id: &str) -> Option<usize> {
        self.machine_ids.iter().position(|m| m == id)
    }
}

/// Extra MW a plant injects in response to falling frequency: `-gain * rocof` clipped to
/// `[0, headroom]`.
pub fn synthetic_inertia(plant: &RenewablePlant, coi_rocof: f64) -> f64 {
    synthetic_response(plant.synthetic_inertia_gain, plant.headroom_mw(), coi_rocof)
}

fn synthetic_response(gain: f64, headroom: f64, rocof: f64) -> f64 {
    (-gain * rocof).clamp(0.0, headroom.max(0.0))
}

fn deadband(x: f64, band: f64) -> f64 {
    x.signum() * (x.abs() - band).max(0.0)
}

#[derive(Debug, Clone, Copy)]
struct Window {
    n0: usize,
    n1: usize,
    step: bool,
}

impl Window {
    fn fraction(&self, n: usize, c: f64) -> f64 {
        if self.step || self.n1 <= self.n0 {
            if n >= self.n0 {
                1.0
            } else {
                0.0
            }
        } else {
            ((n as f64 + c - self.n0 as f64) / (self.n1 - self.n0) as f64).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Switch {
    Shunt(usize, Complex64),
    Branch(usize),
    Machine(usize),
}

struct Runner<'a> {
    eq: &'a Equilibrium,
    opts: SimOptions,
    m: usize,
    e_mag: Vec<f64>,
    net: ReducedNetwork,
    topo: Topology,
    weights: Vec<f64>,
    coi_offset: f64,
    coi0: f64,
    alpha: Vec<f64>,
    bias: f64,
    /// (machine, MW, window)
    mech: Vec<(usize, f64, Window)>,
    /// (bus, plant, MW, window)
    inj: Vec<(usize, Option<usize>, f64, Window)>,
}

impl<'a> Runner<'a> {
    fn governed(&self, i: usize) -> bool {
        self.opts.governors && self.eq.machines[i].governor.is_some()
    }

    fn refresh_controls(&mut self) {
        let active: Vec<bool> = self.topo.machine_out.iter().map(|o| !o).collect();
        self.weights = self.eq.coi_weights(&active);
        let f_s = self.eq.system_frequency();
        let part: f64 = (0..self.m)
            .filter(|&i| active[i])
            .map(|i| self.eq.machines[i].agc_participation)
            .sum();
        self.alpha = (0..self.m)
            .map(|i| {
                if active[i] && part > 0.0 {
                    self.eq.machines[i].agc_participation / part
                } else {
                    0.0
                }
            })
            .collect();
        let mut bias = 0.0;
        for i in (0..self.m).filter(|&i| active[i] && self.governed(i)) {
            let md = &self.eq.machines[i];
            let r = md.governor.as_ref().map(|g| g.droop_r).unwrap_or(1.0);
            bias += md.s_rated / (r * f_s);
        }
        if bias == 0.0 {
            bias = (0..self.m)
                .filter(|&i| active[i] && self.alpha[i] > 0.0)
                .map(|i| self.eq.machines[i].s_rated / (FALLBACK_BIAS_DROOP * f_s))
                .sum();
        }
        self.bias = bias;
    }

    fn coi_rotation(&self, delta: &[f64]) -> Complex64 {
        let angle = Equilibrium::coi_angle(&self.weights, delta) + self.coi_offset - self.coi0;
        Complex64::from_polar(1.0, angle)
    }

    fn coi_frequency(&self, omega: &[f64]) -> f64 {
        let dw: f64 = self.weights.iter().zip(omega).map(|(w, o)| w * o).sum();
        self.eq.system_frequency() + dw / (2.0 * PI)
    }

    fn injections(&self, n: usize, c: f64, rot: Complex64, rocof: f64) -> Vec<Complex64> {
        let eq = self.eq;
        let mut plant_p: Vec<f64> = eq.case.renewables.iter().map(|r| r.output_mw()).collect();
        let mut i_bus = vec![Complex64::new(0.0, 0.0); eq.case.buses.len()];
        for &(bus, plant, mw, win) in &self.inj {
            let p = mw * win.fraction(n, c);
            match plant {
                Some(k) => plant_p[k] += p,
                None => i_bus[bus] += eq.current_per_mw(bus) * p * rot,
            }
        }
        for (k, r) in eq.case.renewables.iter().enumerate() {
            let mut p = plant_p[k];
            if self.opts.synthetic_inertia {
                p += synthetic_response(r.synthetic_inertia_gain, r.nameplate - p, rocof);
            }
            let b = eq.renewable_bus[k];
            i_bus[b] += eq.current_per_mw(b) * p * rot;
        }
        i_bus
    }

    fn emfs(&self, delta: &[f64]) -> Vec<Complex64> {
        self.e_mag
            .iter()
            .zip(delta)
            .map(|(e, d)| Complex64::from_polar(*e, *d))
            .collect()
    }

    fn rhs(&self, n: usize, c: f64, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let eq = self.eq;
        let (f_s, w_s) = (eq.system_frequency(), eq.synchronous_speed());
        let delta = &x[..m];
        let omega = &x[m..2 * m];
        let pg = &x[2 * m..3 * m];
        let z = x[3 * m];
        let f_meas = x[3 * m + 1];

        let f_coi = self.coi_frequency(omega);
        let rocof = (f_coi - f_meas) / ROCOF_FILTER_TC;
        let i_bus = self.injections(n, c, self.coi_rotation(delta), rocof);
        let e = self.emfs(delta);
        let im = self.net.machine_currents(&e, &i_bus);

        let mut mech = vec![0.0; m];
        for &(i, mw, win) in &self.mech {
            mech[i] += mw * win.fraction(n, c);
        }

        let mut dx = vec![0.0; x.len()];
        for i in 0..m {
            if self.topo.machine_out[i] {
                continue;
            }
            let md = &eq.machines[i];
            let pe = (e[i] * im[i].conj()).re * eq.base_mva();
            let agc = if self.opts.agc { self.alpha[i] * z } else { 0.0 };
            let mut pm = eq.p_mech[i] + pg[i] + mech[i];
            if !self.governed(i) {
                pm += agc;
            }
            dx[i] = omega[i];
            dx[m + i] = w_s / (2.0 * md.inertia())
                * (pm - pe - md.damping * md.s_rated * omega[i] / w_s);
            if self.governed(i) {
                let g = md.governor.as_ref().expect("governed");
                let df = deadband(omega[i] / (2.0 * PI), g.deadband);
                dx[2 * m + i] = (-pg[i] + agc - md.s_rated / g.droop_r * df / f_s) / g.time_const;
            }
        }
        if self.opts.agc {
            dx[3 * m] = -self.bias * (f_coi - f_s) / AGC_TIME_CONST;
        }
        dx[3 * m + 1] = (f_coi - f_meas) / ROCOF_FILTER_TC;
        dx
    }

    fn apply(&mut self, sw: Switch, x: &[f64], time: f64) -> Result<(), DynamicsError> {
        match sw {
            Switch::Shunt(b, y) => self.topo.shunt[b] += y,
            Switch::Branch(k) => self.topo.branch_out[k] = true,
            Switch::Machine(i) => {
                let before = Equilibrium::coi_angle(&self.weights, &x[..self.m]) + self.coi_offset;
                self.topo.machine_out[i] = true;
                self.refresh_controls();
                self.coi_offset = before - Equilibrium::coi_angle(&self.weights, &x[..self.m]);
            }
        }
        self.net = self
            .eq
            .build_network(&self.topo)
            .ok_or(DynamicsError::SingularNetwork { time })?;
        Ok(())
    }

    fn record(&self, trace: &mut DynamicTrace, n: usize, x: &[f64]) {
        let m = self.m;
        let delta = &x[..m];
        let omega = &x[m..2 * m];
        let f_coi = self.coi_frequency(omega);
        let rocof = (f_coi - x[3 * m + 1]) / ROCOF_FILTER_TC;
        let i_bus = self.injections(n, 0.0, self.coi_rotation(delta), rocof);
        let v = self.net.bus_voltages(&self.emfs(delta), &i_bus);
        trace.time.push(n as f64 * self.opts.step);
        trace.delta.push(delta.to_vec());
        trace.omega.push(omega.to_vec());
        trace.voltage.push(v.iter().map(|v| v.norm()).collect());
        trace.coi_frequency.push(f_coi);
    }
}

fn grid_index(t: f64, h: f64) -> usize {
    (t / h).round() as usize
}

/// Integrates the classical multi-machine model with fixed-step RK4.
///
/// Events are snapped to the integration grid. Switching events take effect at the start of
/// their step; power steps apply for the whole step they start in and ramps vary linearly
/// inside the RK stages.
pub fn simulate(
    eq: &Equilibrium,
    states: &[MachineState],
    events: &[DisturbanceEvent],
    opts: &SimOptions,
) -> Result<DynamicTrace, DynamicsError> {
    let h = opts.step;
    if !(h > 0.0 && h <= MAX_STEP + 1e-15) {
        return Err(DynamicsError::InvalidOptions(format!(
            "step must be in (0, {MAX_STEP}] s"
        )));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(DynamicsError::InvalidOptions("horizon must be > 0".into()));
    }
    let m = eq.machines.len();
    if states.len() != m {
        return Err(DynamicsError::InvalidOptions(format!(
            "expected {m} machine states, got {}",
            states.len()
        )));
    }
    let case = &eq.case;
    for ev in events {
        ev.validate(case)?;
    }

    let mut runner = Runner {
        eq,
        opts: *opts,
        m,
        e_mag: states.iter().map(|s| s.e_internal).collect(),
        net: eq.network.clone(),
        topo: Topology::intact(case),
        weights: Vec::new(),
        coi_offset: 0.0,
        coi0: eq.initial_coi_angle(),
        alpha: Vec::new(),
        bias: 0.0,
        mech: Vec::new(),
        inj: Vec::new(),
    };
    runner.refresh_controls();

    let mut switches: Vec<(usize, Switch)> = Vec::new();
    for ev in events {
        let n0 = grid_index(ev.t_start, h);
        let n1 = grid_index(ev.t_start + ev.duration, h);
        let win = Window {
            n0,
            n1,
            step: matches!(ev.kind, EventKind::PowerStep { .. }),
        };
        if let Some((target, mw)) = ev.injection() {
            match target {
                InjectionTarget::Machine(id) => {
                    let i = case.machines.iter().position(|x| x.id == id).expect("validated");
                    runner.mech.push((i, mw, win));
                }
                InjectionTarget::Bus(id) => {
                    runner.inj.push((case.bus_index(&id).expect("validated"), None, mw, win));
                }
                InjectionTarget::Renewable(id) => {
                    let k = case.renewables.iter().position(|x| x.id == id).expect("validated");
                    runner.inj.push((eq.renewable_bus[k], Some(k), mw, win));
                }
            }
        }
        match &ev.kind {
            EventKind::BusFault {
                bus,
                r,
                x,
                clear_branch,
            } => {
                let b = case.bus_index(bus).expect("validated");
                let z = if *r == 0.0 && *x == 0.0 {
                    Complex64::new(0.0, BOLTED_FAULT_REACTANCE)
                } else {
                    Complex64::new(*r, *x)
                };
                let y = Complex64::new(1.0, 0.0) / z;
                switches.push((n0, Switch::Shunt(b, y)));
                switches.push((n1.max(n0 + 1), Switch::Shunt(b, -y)));
                if let Some(br) = clear_branch {
                    let k = case.branches.iter().position(|x| &x.id == br).expect("validated");
                    switches.push((n1.max(n0 + 1), Switch::Branch(k)));
                }
            }
            EventKind::ElementTrip { element } => match element {
                ElementRef::Branch(id) => {
                    let k = case.branches.iter().position(|x| &x.id == id).expect("validated");
                    switches.push((n0, Switch::Branch(k)));
                }
                ElementRef::Machine(id) => {
                    let i = case.machines.iter().position(|x| &x.id == id).expect("validated");
                    switches.push((n0, Switch::Machine(i)));
                }
            },
            _ => {}
        }
    }
    switches.sort_by_key(|(n, _)| *n);

    let steps = grid_index(opts.horizon, h).max(1);
    let every = opts.record_every.max(1);
    let mut x = vec![0.0; 3 * m + 2];
    for (i, s) in states.iter().enumerate() {
        x[i] = s.delta;
        x[m + i] = s.omega;
    }
    x[3 * m + 1] = runner.coi_frequency(&x[m..2 * m]);

    let mut trace = DynamicTrace {
        time: Vec::with_capacity(steps / every + 2),
        machine_ids: eq.machine_ids(),
        bus_ids: eq.bus_ids(),
        delta: Vec::new(),
        omega: Vec::new(),
        voltage: Vec::new(),
        coi_frequency: Vec::new(),
        system_frequency: eq.system_frequency(),
        step: h,
        integrator: "rk4".into(),
        events: events.to_vec(),
        event_time: events
            .iter()
            .map(|e| grid_index(e.t_start, h) as f64 * h)
            .reduce(f64::min),
    };

    let w_s = eq.synchronous_speed();
    let mut next = 0;
    for n in 0..=steps {
        while next < switches.len() && switches[next].0 <= n {
            runner.apply(switches[next].1, &x, n as f64 * h)?;
            next += 1;
        }
        if n % every == 0 || n == steps {
            runner.record(&mut trace, n, &x);
        }
        if n == steps {
            break;
        }
        let k1 = runner.rhs(n, 0.0, &x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = runner.rhs(n, 0.5, &x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = runner.rhs(n, 0.5, &x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = runner.rhs(n, 1.0, &x4);
        for j in 0..x.len() {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let blown = x.iter().any(|v| !v.is_finite())
            || x[m..2 * m].iter().any(|w| w.abs() > w_s);
        if blown {
            return Err(DynamicsError::NumericBlowUp {
                time: n as f64 * h,
            });
        }
    }
    Ok(trace)
}

/// Integrates from the equilibrium itself.
pub fn simulate_from_equilibrium(
    eq: &Equilibrium,
    events: &[DisturbanceEvent],
    opts: &SimOptions,
) -> Result<DynamicTrace, DynamicsError> {
    simulate(eq, &eq.states, events, opts)
}
