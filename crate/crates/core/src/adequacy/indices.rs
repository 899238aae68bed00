use super::outage_table::OutageTable;
use super::AdequacyError;
use crate::grid_model::LoadProfile;

fn check_profile(profile: &LoadProfile) -> Result<(), AdequacyError> {
    if profile.daily_peaks.len() != LoadProfile::DAYS {
        return Err(AdequacyError::ProfileLength(profile.daily_peaks.len()));
    }
    Ok(())
}

/// Loss-of-load expectation in days per year with every daily peak raised by `shift` MW.
pub(crate) fn lole_shifted(table: &OutageTable, daily_peaks: &[f64], shift: f64) -> f64 {
    daily_peaks
        .iter()
        .map(|d| table.shortfall_probability(d + shift))
        .sum()
}

/// Expected number of days per year on which available capacity falls short of the daily peak.
pub fn compute_lole(table: &OutageTable, profile: &LoadProfile) -> Result<f64, AdequacyError> {
    check_profile(profile)?;
    Ok(lole_shifted(table, &profile.daily_peaks, 0.0))
}

/// Probability that available capacity falls short of the annual peak.
pub fn compute_lolp(table: &OutageTable, profile: &LoadProfile) -> Result<f64, AdequacyError> {
    check_profile(profile)?;
    Ok(table.shortfall_probability(profile.annual_peak()))
}
