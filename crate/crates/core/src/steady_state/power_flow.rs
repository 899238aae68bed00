use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::network::{build_ybus, scheduled_injections, series_admittance};
use super::PowerFlowError;
use crate::grid_model::{BusKind, GridCase};
use crate::linalg::{max_abs, solve_dense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerFlowMethod {
    AcNewton,
    DcLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    /// Largest acceptable power mismatch, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

impl BranchFlow {
    /// Apparent power at the more heavily loaded end, MVA.
    pub fn max_apparent(&self) -> f64 {
        self.p_from.hypot(self.q_from).max(self.p_to.hypot(self.q_to))
    }
}

/// Solved operating point. Powers are in MW/MVAr, voltages in pu and radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub method: PowerFlowMethod,
    pub bus_ids: Vec<String>,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    /// Net injection at each bus (generation minus load).
    pub p_injection: Vec<f64>,
    pub q_injection: Vec<f64>,
    pub branches: Vec<BranchFlow>,
    /// Output required from the machines at the slack bus.
    pub slack_p: f64,
    pub slack_q: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest residual power mismatch, pu.
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    pub fn voltage(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.vm[i], self.va[i])
    }

    pub fn losses(&self) -> f64 {
        self.branches.iter().map(|b| b.p_from + b.p_to).sum()
    }
}

/// Newton-Raphson formulation of the AC power-flow equations.
#[derive(Debug, Clone)]
pub struct AcModel {
    pub ybus: DMatrix<Complex64>,
    pub p_sched: Vec<f64>,
    pub q_sched: Vec<f64>,
    pub slack: usize,
    /// Buses with unknown angle (all except slack).
    pub pvpq: Vec<usize>,
    /// Buses with unknown magnitude.
    pub pq: Vec<usize>,
}

impl AcModel {
    pub fn new(case: &GridCase) -> Result<Self, PowerFlowError> {
        let slack = case.slack_index().ok_or(PowerFlowError::NoSlack)?;
        let (p_sched, q_sched) = scheduled_injections(case);
        let pvpq = (0..case.buses.len()).filter(|&i| i != slack).collect();
        let pq = case
            .buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Pq)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            ybus: build_ybus(case),
            p_sched,
            q_sched,
            slack,
            pvpq,
            pq,
        })
    }

    pub fn dim(&self) -> usize {
        self.pvpq.len() + self.pq.len()
    }

    fn phasors(va: &[f64], vm: &[f64]) -> DVector<Complex64> {
        DVector::from_iterator(
            va.len(),
            va.iter().zip(vm).map(|(a, m)| Complex64::from_polar(*m, *a)),
        )
    }

    /// Complex power injected at every bus for the given voltages, pu.
    pub fn injections(&self, va: &[f64], vm: &[f64]) -> Vec<Complex64> {
        let v = Self::phasors(va, vm);
        let i = &self.ybus * &v;
        v.iter().zip(i.iter()).map(|(v, i)| v * i.conj()).collect()
    }

    /// Mismatch vector: calculated minus scheduled P on non-slack buses, then Q on PQ buses.
    pub fn mismatch(&self, va: &[f64], vm: &[f64]) -> Vec<f64> {
        let s = self.injections(va, vm);
        let mut f = Vec::with_capacity(self.dim());
        f.extend(self.pvpq.iter().map(|&i| s[i].re - self.p_sched[i]));
        f.extend(self.pq.iter().map(|&i| s[i].im - self.q_sched[i]));
        f
    }

    /// Writes the unknowns back into full angle/magnitude vectors.
    pub fn scatter(&self, x: &[f64], va: &mut [f64], vm: &mut [f64]) {
        let n = self.pvpq.len();
        for (k, &i) in self.pvpq.iter().enumerate() {
            va[i] = x[k];
        }
        for (k, &i) in self.pq.iter().enumerate() {
            vm[i] = x[n + k];
        }
    }

    pub fn gather(&self, va: &[f64], vm: &[f64]) -> Vec<f64> {
        self.pvpq
            .iter()
            .map(|&i| va[i])
            .chain(self.pq.iter().map(|&i| vm[i]))
            .collect()
    }

    /// Analytic Jacobian of [`AcModel::mismatch`] with respect to (angles, magnitudes).
    pub fn jacobian(&self, va: &[f64], vm: &[f64]) -> DMatrix<f64> {
        let n = va.len();
        let v = Self::phasors(va, vm);
        let ibus = &self.ybus * &v;
        let j = Complex64::new(0.0, 1.0);
        // dS/dθ = j·diag(V)·conj(diag(I) − Y·diag(V))
        // dS/d|V| = diag(V)·conj(Y·diag(V/|V|)) + conj(diag(I))·diag(V/|V|)
        let mut ds_da = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut ds_dm = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for r in 0..n {
            for c in 0..n {
                let y = self.ybus[(r, c)];
                let vn = v[c] / vm[c];
                let mut a = -(y * v[c]).conj();
                let mut m = v[r] * (y * vn).conj();
                if r == c {
                    a += ibus[r].conj();
                    m += ibus[r].conj() * vn;
                }
                ds_da[(r, c)] = j * v[r] * a;
                ds_dm[(r, c)] = m;
            }
        }
        let np = self.pvpq.len();
        let dim = self.dim();
        let mut jac = DMatrix::zeros(dim, dim);
        for (ri, &r) in self.pvpq.iter().enumerate() {
            for (ci, &c) in self.pvpq.iter().enumerate() {
                jac[(ri, ci)] = ds_da[(r, c)].re;
            }
            for (ci, &c) in self.pq.iter().enumerate() {
                jac[(ri, np + ci)] = ds_dm[(r, c)].re;
            }
        }
        for (ri, &r) in self.pq.iter().enumerate() {
            for (ci, &c) in self.pvpq.iter().enumerate() {
                jac[(np + ri, ci)] = ds_da[(r, c)].im;
            }
            for (ci, &c) in self.pq.iter().enumerate() {
                jac[(np + ri, np + ci)] = ds_dm[(r, c)].im;
            }
        }
        jac
    }

    fn unknown_bus(&self, k: usize) -> usize {
        if k < self.pvpq.len() {
            self.pvpq[k]
        } else {
            self.pq[k - self.pvpq.len()]
        }
    }
}

/// Flat start: angles 0, magnitudes at setpoint for regulated buses and 1.0 elsewhere.
pub fn flat_start(case: &GridCase) -> (Vec<f64>, Vec<f64>) {
    let va = vec![0.0; case.buses.len()];
    let vm = case
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_set })
        .collect();
    (va, vm)
}

pub fn solve_power_flow(
    case: &GridCase,
    method: PowerFlowMethod,
) -> Result<PowerFlowSolution, PowerFlowError> {
    match method {
        PowerFlowMethod::AcNewton => solve_ac(case, &PowerFlowOptions::default(), None),
        PowerFlowMethod::DcLinear => solve_dc(case),
    }
}

/// Newton-Raphson AC power flow. `start` overrides the flat start with (angles, magnitudes).
pub fn solve_ac(
    case: &GridCase,
    opts: &PowerFlowOptions,
    start: Option<(&[f64], &[f64])>,
) -> Result<PowerFlowSolution, PowerFlowError> {
    let model = AcModel::new(case)?;
    let (mut va, mut vm) = flat_start(case);
    if let Some((a, m)) = start {
        va.copy_from_slice(a);
        // regulated magnitudes stay at setpoint
        for &i in &model.pq {
            vm[i] = m[i];
        }
    }
    let mut iterations = 0;
    let mut f = model.mismatch(&va, &vm);
    let mut norm = max_abs(&f);
    loop {
        if norm <= opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations || !norm.is_finite() || norm > 1e8 {
            return Err(PowerFlowError::NonConvergence {
                iterations,
                max_mismatch: norm,
            });
        }
        let jac = model.jacobian(&va, &vm);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let dx = solve_dense(jac, rhs).map_err(|k| PowerFlowError::SingularJacobian {
            bus: case.buses[model.unknown_bus(k)].id.clone(),
        })?;
        let mut x = model.gather(&va, &vm);
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
        model.scatter(&x, &mut va, &mut vm);
        iterations += 1;
        f = model.mismatch(&va, &vm);
        norm = max_abs(&f);
    }
    let s = model.injections(&va, &vm);
    Ok(assemble(case, PowerFlowMethod::AcNewton, &model, va, vm, &s, iterations, norm))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    case: &GridCase,
    method: PowerFlowMethod,
    model: &AcModel,
    va: Vec<f64>,
    vm: Vec<f64>,
    s: &[Complex64],
    iterations: usize,
    max_mismatch: f64,
) -> PowerFlowSolution {
    let base = case.base_mva;
    let slack = model.slack;
    let sb = &case.buses[slack];
    let ren_at_slack: f64 = case
        .renewables
        .iter()
        .filter(|r| r.bus == sb.id)
        .map(|r| r.output_mw())
        .sum();
    let branches = case
        .branches
        .iter()
        .map(|br| {
            let f = case.bus_index(&br.from_bus).expect("validated");
            let t = case.bus_index(&br.to_bus).expect("validated");
            let (s_f, s_t) = match method {
                PowerFlowMethod::AcNewton => {
                    let vf = Complex64::from_polar(vm[f], va[f]);
                    let vt = Complex64::from_polar(vm[t], va[t]);
                    let ys = series_admittance(br);
                    let sh = Complex64::new(0.0, br.b_shunt / 2.0);
                    let i_f = (ys + sh) * vf - ys * vt;
                    let i_t = (ys + sh) * vt - ys * vf;
                    (vf * i_f.conj() * base, vt * i_t.conj() * base)
                }
                PowerFlowMethod::DcLinear => {
                    let p = (va[f] - va[t]) / br.x * base;
                    (Complex64::new(p, 0.0), Complex64::new(-p, 0.0))
                }
            };
            super::power_flow::BranchFlow {
                id: br.id.clone(),
                from_bus: br.from_bus.clone(),
                to_bus: br.to_bus.clone(),
                p_from: s_f.re,
                q_from: s_f.im,
                p_to: s_t.re,
                q_to: s_t.im,
            }
        })
        .collect();
    PowerFlowSolution {
        method,
        bus_ids: case.buses.iter().map(|b| b.id.clone()).collect(),
        p_injection: s.iter().map(|v| v.re * base).collect(),
        q_injection: s.iter().map(|v| v.im * base).collect(),
        slack_p: s[slack].re * base + sb.load_p - ren_at_slack,
        slack_q: s[slack].im * base + sb.load_q,
        vm,
        va,
        branches,
        converged: true,
        iterations,
        max_mismatch,
    }
}

/// Lossless linear (DC) power flow: unit magnitudes, angles from B'θ = P.
pub fn solve_dc(case: &GridCase) -> Result<PowerFlowSolution, PowerFlowError> {
    let model = AcModel::new(case)?;
    let n = case.buses.len();
    let mut bp = DMatrix::<f64>::zeros(n, n);
    for br in &case.branches {
        let (Some(f), Some(t)) = (case.bus_index(&br.from_bus), case.bus_index(&br.to_bus)) else {
            continue;
        };
        let b = 1.0 / br.x;
        bp[(f, f)] += b;
        bp[(t, t)] += b;
        bp[(f, t)] -= b;
        bp[(t, f)] -= b;
    }
    let idx = &model.pvpq;
    let m = idx.len();
    let reduced = DMatrix::from_fn(m, m, |r, c| bp[(idx[r], idx[c])]);
    let rhs = DVector::from_iterator(m, idx.iter().map(|&i| model.p_sched[i]));
    let theta = solve_dense(reduced, rhs).map_err(|k| PowerFlowError::SingularJacobian {
        bus: case.buses[idx[k]].id.clone(),
    })?;
    let mut va = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        va[i] = theta[k];
    }
    let p: Vec<f64> = (0..n)
        .map(|r| (0..n).map(|c| bp[(r, c)] * va[c]).sum::<f64>())
        .collect();
    let residual = idx
        .iter()
        .map(|&i| (p[i] - model.p_sched[i]).abs())
        .fold(0.0, f64::max);
    let s: Vec<Complex64> = p.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut sol = assemble(
        case,
        PowerFlowMethod::DcLinear,
        &model,
        va,
        vec![1.0; n],
        &s,
        1,
        residual,
    );
    sol.slack_q = 0.0;
    sol.q_injection = vec![0.0; n];
    Ok(sol)
}
