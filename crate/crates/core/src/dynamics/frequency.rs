use serde::{Deserialize, Serialize};

use super::simulate::DynamicTrace;
use super::DynamicsError;

/// Window after the event over which the initial ROCOF is measured, s.
pub const ROCOF_WINDOW: f64 = 0.5;
/// Peak-to-peak band the tail of a trace must stay within to count as settled, Hz.
pub const SETTLING_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyOptions {
    /// Hz
    pub ufls_threshold: f64,
    /// s
    pub ufls_dwell: f64,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self::for_system(60.0)
    }
}

impl FrequencyOptions {
    /// Threshold 0.7 Hz below nominal (59.3 Hz at 60 Hz), 0.1 s dwell.
    pub fn for_system(f_s: f64) -> Self {
        Self {
            ufls_threshold: f_s - 0.7,
            ufls_dwell: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMetrics {
    /// Hz
    pub nadir: f64,
    /// s
    pub nadir_time: f64,
    /// Hz/s
    pub initial_rocof: f64,
    /// Hz; absent when the tail of the trace is still moving.
    pub settling_frequency: Option<f64>,
    pub ufls_tripped: bool,
}

fn interpolate(time: &[f64], values: &[f64], t: f64) -> f64 {
    let last = time.len() - 1;
    if t <= time[0] {
        return values[0];
    }
    if t >= time[last] {
        return values[last];
    }
    let k = time.partition_point(|&x| x <= t);
    let (t0, t1) = (time[k - 1], time[k]);
    let a = (t - t0) / (t1 - t0);
    values[k - 1] + a * (values[k] - values[k - 1])
}

pub fn frequency_metrics(
    trace: &DynamicTrace,
    opts: &FrequencyOptions,
) -> Result<FrequencyMetrics, DynamicsError> {
    if trace.is_empty() {
        return Err(DynamicsError::EmptyTrace);
    }
    let (time, f) = (&trace.time, &trace.coi_frequency);
    let mut nadir_at = 0;
    for (k, v) in f.iter().enumerate() {
        if *v < f[nadir_at] {
            nadir_at = k;
        }
    }

    let t_e = trace.event_time.unwrap_or(time[0]);
    let t_end = (t_e + ROCOF_WINDOW).min(time[time.len() - 1]);
    let initial_rocof = if t_end > t_e {
        (interpolate(time, f, t_end) - interpolate(time, f, t_e)) / (t_end - t_e)
    } else {
        0.0
    };

    let span = time[time.len() - 1] - time[0];
    let window = (0.1 * span).max(1.0);
    let start = time[time.len() - 1] - window;
    let tail: Vec<f64> = time
        .iter()
        .zip(f)
        .filter(|(t, _)| **t >= start - 1e-9)
        .map(|(_, v)| *v)
        .collect();
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let settling_frequency =
        (hi - lo <= SETTLING_BAND).then(|| tail.iter().sum::<f64>() / tail.len() as f64);

    let mut ufls_tripped = false;
    let mut below_since: Option<f64> = None;
    for (t, v) in time.iter().zip(f) {
        if *v < opts.ufls_threshold {
            let since = *below_since.get_or_insert(*t);
            if t - since >= opts.ufls_dwell - 1e-9 {
                ufls_tripped = true;
                break;
            }
        } else {
            below_since = None;
        }
    }

    Ok(FrequencyMetrics {
        nadir: f[nadir_at],
        nadir_time: time[nadir_at],
        initial_rocof,
        settling_frequency,
        ufls_tripped,
    })
}

/// Frequency deviation of the inertial-response relation `f_s / sum(H_i S_i) * delta_p`,
/// evaluated exactly as written (no factor of two).
pub fn inertial_deviation(
    machines: &[(f64, f64)],
    f_s: f64,
    delta_p: f64,
) -> Result<f64, DynamicsError> {
    let total: f64 = machines.iter().map(|(h, s)| h * s).sum();
    if !(total > 0.0) {
        return Err(DynamicsError::ZeroInertia);
    }
    Ok(f_s / total * delta_p)
}

/// Initial ROCOF from aggregating the swing equation over the centre of inertia:
/// `f_s * delta_p / (2 * sum(H_i S_i))`.
pub fn coi_rocof_law(machines: &[(f64, f64)], f_s: f64, delta_p: f64) -> Result<f64, DynamicsError> {
    let total: f64 = machines.iter().map(|(h, s)| h * s).sum();
    if !(total > 0.0) {
        return Err(DynamicsError::ZeroInertia);
    }
    Ok(f_s * delta_p / (2.0 * total))
}
