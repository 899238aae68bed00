use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::outage_table::{unit_models, RenewableModel, UnitModel, LOAD_EPS};
use super::{AdequacyError, AdequacyMethod, AdequacyResult};
use crate::grid_model::{GridCase, LoadProfile};

/// Stream id of a penetration level, so a level's draws do not depend on which other
/// levels are evaluated or in what order.
pub(crate) fn level_stream(penetration: f64) -> u64 {
    (penetration * 1e6).round() as u64
}

fn draw_outage(unit: &UnitModel, rng: &mut ChaCha8Rng) -> f64 {
    if unit.states.len() == 1 {
        return unit.states[0].0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(out, p) in &unit.states {
        acc += p;
        if u < acc {
            return out;
        }
    }
    unit.states.last().map(|s| s.0).unwrap_or(0.0)
}

/// Monte Carlo estimate over an explicit unit list. Sample `k` draws every unit's state
/// for day `k mod 365`.
pub fn monte_carlo_units(
    units: &[UnitModel],
    profile: &LoadProfile,
    samples: u64,
    seed: u64,
    stream: u64,
) -> Result<(f64, f64, f64), AdequacyError> {
    if samples == 0 {
        return Err(AdequacyError::NoSamples);
    }
    if profile.daily_peaks.len() != LoadProfile::DAYS {
        return Err(AdequacyError::ProfileLength(profile.daily_peaks.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let total: f64 = units.iter().map(|u| u.capacity).sum();
    let peak = profile.annual_peak();
    let (mut hits, mut peak_hits) = (0u64, 0u64);
    for k in 0..samples {
        let load = profile.daily_peaks[(k % LoadProfile::DAYS as u64) as usize];
        let out: f64 = units.iter().map(|u| draw_outage(u, &mut rng)).sum();
        let available = total - out;
        if available < load - LOAD_EPS {
            hits += 1;
        }
        if available < peak - LOAD_EPS {
            peak_hits += 1;
        }
    }
    let n = samples as f64;
    let days = LoadProfile::DAYS as f64;
    let p = hits as f64 / n;
    let lole = days * p;
    // sample standard deviation of the per-sample indicator, scaled to days/year
    let var = if samples > 1 {
        p * (1.0 - p) * n / (n - 1.0)
    } else {
        0.0
    };
    let std_err = days * (var / n).sqrt();
    Ok((lole, peak_hits as f64 / n, std_err))
}

/// Sampled loss-of-load expectation for `case` with renewables firm at `penetration`.
pub fn monte_carlo_lole(
    case: &GridCase,
    penetration: f64,
    samples: u64,
    seed: u64,
) -> Result<AdequacyResult, AdequacyError> {
    let profile = case.system_profile().ok_or(AdequacyError::NoProfile)?;
    let model = RenewableModel::Firm { penetration };
    let units = unit_models(&case.machines, &case.renewables, model)?;
    let (lole, lolp, std_err) =
        monte_carlo_units(&units, &profile, samples, seed, level_stream(penetration))?;
    Ok(AdequacyResult {
        penetration,
        lole,
        lolp,
        method: AdequacyMethod::MonteCarlo,
        mc_std_err: Some(std_err),
        samples: Some(samples),
        seed: Some(seed),
        renewable_model: model.label().into(),
    })
}
