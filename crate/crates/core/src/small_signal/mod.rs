//! Linearized electromechanical model, eigen-modes and frequency-band classification.

mod intermittency;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, Equilibrium};
use crate::report::write_csv;

pub use intermittency::{
    intermittency_study, study_json, IntermittencyConfig, IntermittencyRecord, IntermittencyReport,
    MIN_STUDY_HORIZON,
};

/// Damping ratio below which a mode is flagged in reports. A planning convention, configurable.
pub const DEFAULT_DAMPING_FLOOR: f64 = 0.03;
const SCHUR_MAX_ITERATIONS: usize = 10_000;
/// Eigenvalues smaller than this times the Frobenius norm of the state matrix belong to the
/// angle-reference mode.
const ZERO_MODE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SmallSignalError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("eigenvalue iteration did not converge within {0} iterations")]
    EigenNonConvergence(usize),
    #[error("intermittency studies require a horizon of at least {min} s (requested {requested} s)")]
    HorizonTooShort { requested: f64, min: f64 },
    #[error("invalid study: {0}")]
    InvalidStudy(String),
}

/// State matrix over (Δδ, Δω) of every machine, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub machine_ids: Vec<String>,
    /// Operating-point rotor angles, rad.
    pub delta0: Vec<f64>,
    /// Synchronizing coefficients ∂Pe_i/∂δ_k, MW/rad.
    pub synchronizing: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Assembles the state matrix from analytic derivatives of the reduced-network electrical power.
pub fn linearize(eq: &Equilibrium) -> LinearModel {
    let m = eq.states.len();
    let delta0: Vec<f64> = eq.states.iter().map(|s| s.delta).collect();
    let e = eq.emfs(&delta0);
    let weights = eq.coi_weights(&vec![true; m]);
    let rot = Complex64::from_polar(
        1.0,
        Equilibrium::coi_angle(&weights, &delta0) - eq.initial_coi_angle(),
    );
    let i_bus = eq.base_injections(rot);
    let net = &eq.network;
    let base = eq.base_mva();

    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut i_eq = Complex64::new(0.0, 0.0);
        for (b, ib) in i_bus.iter().enumerate() {
            i_eq += net.k[(i, b)] * ib;
        }
        let b_i = (e[i] * i_eq.conj()).im;
        let mut diag = 0.0;
        for j in 0..m {
            let injection = -b_i * (if i == j { 1.0 } else { 0.0 } - weights[j]);
            if j != i {
                let c = (e[i] * (net.y_red[(i, j)] * e[j]).conj()).im;
                diag -= c;
                k[(i, j)] = (c + injection) * base;
            } else {
                k[(i, j)] = injection * base;
            }
        }
        k[(i, i)] += diag * base;
    }

    let w_s = eq.synchronous_speed();
    let inertia = eq.inertias();
    let damping = eq.dampings();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        a[(i, m + i)] = 1.0;
        let scale = w_s / (2.0 * inertia[i]);
        for j in 0..m {
            a[(m + i, j)] = -scale * k[(i, j)];
        }
        a[(m + i, m + i)] = -scale * damping[i] / w_s;
    }
    LinearModel {
        machine_ids: eq.machine_ids(),
        delta0,
        synchronizing: k,
        a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeBand {
    InterArea,
    Interplant,
    LocalPlant,
    OutOfBand,
}

impl ModeBand {
    pub fn label(self) -> &'static str {
        match self {
            ModeBand::InterArea => "inter_area",
            ModeBand::Interplant => "interplant",
            ModeBand::LocalPlant => "local_plant",
            ModeBand::OutOfBand => "out_of_band",
        }
    }
}

/// Inter-area [0.1, 1.0) Hz, interplant [1.0, 2.0) Hz, local plant [2.0, 3.0] Hz.
pub fn classify_band(frequency_hz: f64) -> ModeBand {
    if (0.1..1.0).contains(&frequency_hz) {
        ModeBand::InterArea
    } else if (1.0..2.0).contains(&frequency_hz) {
        ModeBand::Interplant
    } else if (2.0..=3.0).contains(&frequency_hz) {
        ModeBand::LocalPlant
    } else {
        ModeBand::OutOfBand
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDescriptor {
    /// 1/s
    pub sigma: f64,
    /// rad/s, non-negative
    pub omega: f64,
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub band: ModeBand,
}

impl ModeDescriptor {
    pub fn from_eigenvalue(lambda: Complex64) -> Self {
        let (sigma, omega) = (lambda.re, lambda.im.abs());
        let mag = lambda.norm();
        let frequency_hz = omega / (2.0 * std::f64::consts::PI);
        Self {
            sigma,
            omega,
            frequency_hz,
            damping_ratio: if mag > 0.0 { -sigma / mag } else { 0.0 },
            band: classify_band(frequency_hz),
        }
    }

    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.sigma, self.omega)
    }

    pub fn is_oscillatory(&self) -> bool {
        self.omega > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalAnalysis {
    /// One entry per conjugate pair or real eigenvalue, sorted by frequency.
    pub modes: Vec<ModeDescriptor>,
    /// Eigenvalues of the angle-reference mode.
    pub zero_modes: Vec<Complex64>,
    pub eigenvalues: Vec<Complex64>,
}

impl ModalAnalysis {
    pub fn oscillatory(&self) -> impl Iterator<Item = &ModeDescriptor> {
        self.modes.iter().filter(|m| m.is_oscillatory())
    }

    /// Least-damped oscillatory mode.
    pub fn worst_mode(&self) -> Option<ModeDescriptor> {
        self.oscillatory()
            .copied()
            .min_by(|a, b| a.damping_ratio.total_cmp(&b.damping_ratio))
    }
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>, SmallSignalError> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITERATIONS)
        .ok_or(SmallSignalError::EigenNonConvergence(SCHUR_MAX_ITERATIONS))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn modes(model: &LinearModel) -> Result<ModalAnalysis, SmallSignalError> {
    let eigenvalues = eigenvalues(&model.a)?;
    let tol = ZERO_MODE_TOL * model.a.norm().max(1.0);
    let mut zero_modes = Vec::new();
    let mut modes = Vec::new();
    for &lambda in &eigenvalues {
        if lambda.norm() <= tol {
            zero_modes.push(lambda);
        } else if lambda.im >= 0.0 {
            // conjugate partners (negative imaginary part) are represented by this entry
            modes.push(ModeDescriptor::from_eigenvalue(lambda));
        }
    }
    modes.sort_by(|a, b| {
        a.frequency_hz
            .total_cmp(&b.frequency_hz)
            .then(a.sigma.total_cmp(&b.sigma))
    });
    Ok(ModalAnalysis {
        modes,
        zero_modes,
        eigenvalues,
    })
}

#[derive(Serialize)]
struct ModeRow {
    frequency_hz: f64,
    damping_ratio: f64,
    sigma: f64,
    omega: f64,
    band: &'static str,
}

/// Mode table: frequency_hz, damping_ratio, sigma, omega, band.
pub fn modes_csv(analysis: &ModalAnalysis) -> String {
    write_csv(analysis.modes.iter().map(|m| ModeRow {
        frequency_hz: m.frequency_hz,
        damping_ratio: m.damping_ratio,
        sigma: m.sigma,
        omega: m.omega,
        band: m.band.label(),
    }))
}
