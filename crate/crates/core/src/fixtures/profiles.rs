//! Synthetic capacity-factor and demand series.
//!
//! PV follows a clear-sky elevation curve at 48° N scaled by a seeded daily
//! clearness index in [0.1, 1]; the design day (summer solstice) is always
//! clear, so its solar-noon hour is the yearly maximum with CF = 1.
//! Household demand is a base load with morning and evening peaks and a
//! winter-heavy seasonal factor.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FixtureError;

pub const HOURS_PER_YEAR: usize = 8760;
/// Day of year (0-based) of the design day.
pub const DESIGN_DAY: usize = 171;
/// Hour of day holding the yearly PV maximum.
pub const DESIGN_HOUR: usize = 12;
const LATITUDE_DEG: f64 = 48.0;
const CLEARNESS_MIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    /// Absolute hour of year for each entry.
    pub hour_of_year: Vec<usize>,
    pub pv_cf: Vec<f64>,
    /// Household demand shape, normalized to a mean of 1 over the year.
    pub demand: Vec<f64>,
}

fn sin_elevation(day: usize, hour: usize) -> f64 {
    let decl = (23.45f64).to_radians() * (2.0 * PI * (284.0 + day as f64 + 1.0) / 365.0).sin();
    let lat = LATITUDE_DEG.to_radians();
    // Midpoint of the hour, solar time.
    let omega = (15.0 * (hour as f64 + 0.5 - 12.0)).to_radians();
    lat.sin() * decl.sin() + lat.cos() * decl.cos() * omega.cos()
}

/// Clear-sky curve normalized so the design hour equals 1.
pub fn clear_sky(day: usize, hour: usize) -> f64 {
    // The design hour straddles noon, so its midpoint is 12:30; take the peak
    // of the curve over the year instead of a fixed closed form.
    let peak = sin_elevation(DESIGN_DAY, DESIGN_HOUR).max(sin_elevation(DESIGN_DAY, DESIGN_HOUR - 1));
    (sin_elevation(day, hour).max(0.0) / peak).min(1.0)
}

fn demand_shape(day: usize, hour: usize) -> f64 {
    let h = hour as f64 + 0.5;
    let bump = |centre: f64, width: f64| (-((h - centre) / width).powi(2) / 2.0).exp();
    let daily = 0.45 + 0.55 * bump(7.5, 1.2) + 1.0 * bump(19.0, 2.0) + 0.2 * bump(13.0, 1.5);
    let seasonal = 1.0 + 0.25 * (2.0 * PI * (day as f64 - 15.0) / 365.0).cos();
    daily * seasonal
}

/// Hour-of-year indices for a series of `hours` entries: the design hour,
/// the design day, or every `8760 / hours`-th hour of the year.
pub fn sample_hours(hours: usize) -> Result<Vec<usize>, FixtureError> {
    match hours {
        1 => Ok(vec![DESIGN_DAY * 24 + DESIGN_HOUR]),
        24 => Ok((0..24).map(|h| DESIGN_DAY * 24 + h).collect()),
        n if n > 0 && HOURS_PER_YEAR % n == 0 => {
            let step = HOURS_PER_YEAR / n;
            Ok((0..n).map(|k| k * step).collect())
        }
        n => Err(FixtureError::Hours(n)),
    }
}

pub fn synth_profiles(hours: usize, seed: u64) -> Result<Profiles, FixtureError> {
    let hour_of_year = sample_hours(hours)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clearness: Vec<f64> = (0..365)
        .map(|d| {
            if d == DESIGN_DAY {
                1.0
            } else {
                rng.gen_range(CLEARNESS_MIN..=1.0)
            }
        })
        .collect();
    let mean_demand = (0..HOURS_PER_YEAR).map(|t| demand_shape(t / 24, t % 24)).sum::<f64>() / HOURS_PER_YEAR as f64;
    let pv_cf = hour_of_year
        .iter()
        .map(|&t| clear_sky(t / 24, t % 24) * clearness[t / 24])
        .collect();
    let demand = hour_of_year
        .iter()
        .map(|&t| demand_shape(t / 24, t % 24) / mean_demand)
        .collect();
    Ok(Profiles {
        hour_of_year,
        pv_cf,
        demand,
    })
}

/// Per-household demand series: the shared shape with seeded hourly noise
/// and a random daily time shift, rescaled to `annual_mwh` over a full year.
pub fn household_demand(profiles: &Profiles, annual_mwh: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = profiles.demand.len();
    let shift = rng.gen_range(0..3usize);
    let raw: Vec<f64> = (0..n)
        .map(|k| {
            let base = if n == HOURS_PER_YEAR {
                profiles.demand[(k + HOURS_PER_YEAR - shift) % HOURS_PER_YEAR]
            } else {
                profiles.demand[k]
            };
            base * rng.gen_range(0.6..1.4)
        })
        .collect();
    // Mean power is annual energy over the year; the sampled entries keep
    // that mean.
    let mean = raw.iter().sum::<f64>() / n as f64;
    let target = annual_mwh / HOURS_PER_YEAR as f64;
    raw.into_iter().map(|v| v * target / mean).collect()
}
