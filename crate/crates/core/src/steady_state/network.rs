use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid_model::{Branch, GridCase};

pub(crate) fn series_admittance(br: &Branch) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x)
}

/// Bus admittance matrix (pu) from pi-equivalent branches.
pub fn build_ybus(case: &GridCase) -> DMatrix<Complex64> {
    let n = case.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in &case.branches {
        let (Some(f), Some(t)) = (case.bus_index(&br.from_bus), case.bus_index(&br.to_bus)) else {
            continue;
        };
        let ys = series_admittance(br);
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        y[(f, f)] += ys + half;
        y[(t, t)] += ys + half;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    y
}

/// Scheduled net injections per bus in pu: machines and renewables minus load.
pub fn scheduled_injections(case: &GridCase) -> (Vec<f64>, Vec<f64>) {
    let n = case.buses.len();
    let base = case.base_mva;
    let mut p: Vec<f64> = case.buses.iter().map(|b| -b.load_p / base).collect();
    let mut q: Vec<f64> = case.buses.iter().map(|b| -b.load_q / base).collect();
    debug_assert_eq!(p.len(), n);
    for m in &case.machines {
        if let Some(i) = case.bus_index(&m.bus) {
            p[i] += m.p_set / base;
            q[i] += m.q_set / base;
        }
    }
    for r in &case.renewables {
        if let Some(i) = case.bus_index(&r.bus) {
            p[i] += r.output_mw() / base;
        }
    }
    (p, q)
}
