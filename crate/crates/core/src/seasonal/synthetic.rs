//! Synthetic arrival timestamps with calendar patterns and clustered residuals.
//!
//! Arrivals are generated by time-changing a unit-mean GAS duration process
//! through the cumulative intensity of a calendar-dependent arrival rate:
//!
//! ```text
//! λ(s) = λ₀ · exp(A · (diurnal(hour) + weekly(day))) · (1 + (G − 1) s / S)
//! ```
//!
//! The diurnal profile has a night lull, a 9–11 AM burst and a busy afternoon;
//! the weekly profile declines from Monday to Saturday and recovers on Sunday;
//! the rate grows linearly by the factor `G` over the horizon `S`. `λ₀` is
//! chosen so the expected number of arrivals matches the configuration.
//! Timestamps are truncated to whole minutes, which produces zero gaps.

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::MINUTES_PER_WEEK;
use crate::error::{domain, Result};
use crate::gas::{calibrate_unit_mean, GasParams, GasProcess};
use crate::rng::{RandomStream, Substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// First instant of the horizon; a Monday midnight keeps weeks aligned.
    pub start: NaiveDateTime,
    pub weeks: u32,
    /// Expected number of arrivals over the horizon.
    pub expected_events: f64,
    /// Multiplier on the log-rate calendar profile; 0 gives a flat profile.
    pub seasonal_amplitude: f64,
    /// Ratio of the arrival rate at the end of the horizon to the start.
    pub trend_growth: f64,
    /// Duration model in operational time, rescaled to unit mean before use.
    pub residual: GasParams,
    /// Pilot length for the unit-mean calibration of dynamic residuals.
    pub calibration_draws: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2018, 6, 11)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            weeks: 28,
            expected_events: 5754.0,
            seasonal_amplitude: 1.0,
            trend_growth: 1.8,
            residual: GasParams {
                c: -0.06,
                b: 0.72,
                a: 0.07,
                psi: 1.15,
                phi: 0.90,
            },
            calibration_draws: 1_000_000,
        }
    }
}

fn circular_bump(hour: f64, center: f64, width: f64) -> f64 {
    let mut d = (hour - center).abs() % 24.0;
    if d > 12.0 {
        d = 24.0 - d;
    }
    (-0.5 * (d / width).powi(2)).exp()
}

/// Log-rate profile over the day, by hour in [0, 24).
pub fn diurnal_profile(hour: f64) -> f64 {
    1.0 * circular_bump(hour, 10.0, 1.0) + 0.6 * circular_bump(hour, 14.0, 2.5) + 0.2 * circular_bump(hour, 20.0, 2.0)
        - 1.6 * circular_bump(hour, 4.0, 2.8)
}

/// Log-rate profile over the week, by fractional day (Monday = 0).
pub fn weekly_profile(day: f64) -> f64 {
    let d = day.rem_euclid(7.0);
    if d < 5.5 {
        0.3 - 0.6 * d / 5.5
    } else {
        -0.3 + 0.6 * (d - 5.5) / 1.5
    }
}

/// Calendar part of the log arrival rate at week position `x` (minutes).
pub fn calendar_log_rate(x: f64) -> f64 {
    let x = x.rem_euclid(MINUTES_PER_WEEK);
    diurnal_profile((x % 1440.0) / 60.0) + weekly_profile(x / 1440.0)
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weeks == 0 {
            return domain("synthetic horizon must span at least one week");
        }
        if !(self.expected_events >= 3.0) {
            return domain("expected_events must be at least 3");
        }
        if !(self.trend_growth > 0.0) || !self.seasonal_amplitude.is_finite() {
            return domain("trend_growth must be positive and seasonal_amplitude finite");
        }
        self.residual.validate()
    }

    fn horizon_minutes(&self) -> usize {
        self.weeks as usize * MINUTES_PER_WEEK as usize
    }

    /// Unnormalized rate at minute offset `s`.
    fn shape_rate(&self, s: f64, week_offset: f64) -> f64 {
        let horizon = self.horizon_minutes() as f64;
        let trend = 1.0 + (self.trend_growth - 1.0) * s / horizon;
        (self.seasonal_amplitude * calendar_log_rate(week_offset + s)).exp() * trend
    }
}

/// Generates arrival timestamps, sorted and truncated to the minute.
pub fn generate(config: &SyntheticConfig, seed: u64) -> Result<Vec<NaiveDateTime>> {
    config.validate()?;
    let horizon = config.horizon_minutes();
    let week_offset = super::week_position(&config.start);

    // Cumulative intensity on a one-minute grid, midpoint rule.
    let mut cumulative = Vec::with_capacity(horizon + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for m in 0..horizon {
        acc += config.shape_rate(m as f64 + 0.5, week_offset);
        cumulative.push(acc);
    }
    let base_rate = config.expected_events / acc;
    for v in cumulative.iter_mut() {
        *v *= base_rate;
    }
    let total = cumulative[horizon];

    let mut calib_rng = RandomStream::substream(seed, Substream::Calibration, 0);
    let (params, _) = calibrate_unit_mean(&config.residual, config.calibration_draws, &mut calib_rng)?;
    let mut process = GasProcess::new(params)?;
    let mut rng = RandomStream::substream(seed, Substream::Generator, 0);

    let mut out = Vec::with_capacity(config.expected_events as usize + 64);
    let mut op_time = process.next_duration(&mut rng);
    let mut cursor = 0usize;
    while op_time < total {
        while cumulative[cursor + 1] < op_time {
            cursor += 1;
        }
        let lo = cumulative[cursor];
        let hi = cumulative[cursor + 1];
        let frac = if hi > lo { (op_time - lo) / (hi - lo) } else { 0.0 };
        let minute = (cursor as f64 + frac).floor() as i64;
        out.push(config.start + chrono::Duration::minutes(minute));
        op_time += process.next_duration(&mut rng);
    }
    if out.len() < 3 {
        return domain(format!("only {} arrivals generated", out.len()));
    }
    Ok(out)
}
