//! Shared inputs for the benchmarks.

use chrono::NaiveDate;
use gasqueue::seasonal::synthetic::{generate, SyntheticConfig};
use gasqueue::{GasParams, InterArrivalSeries, RandomStream};

pub fn dynamic_gg() -> GasParams {
    GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).expect("valid parameters")
}

/// `n` durations from the dynamic generalized gamma model.
pub fn durations(n: usize, seed: u64) -> Vec<f64> {
    gasqueue::gas_simulate(&dynamic_gg(), n, &mut RandomStream::new(seed)).expect("simulates")
}

/// A synthetic series of `weeks` weeks at roughly 200 arrivals per week.
pub fn series(weeks: u32, seed: u64) -> InterArrivalSeries {
    let config = SyntheticConfig {
        start: NaiveDate::from_ymd_opt(2018, 6, 11)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid date"),
        weeks,
        expected_events: 200.0 * weeks as f64,
        calibration_draws: 100_000,
        ..Default::default()
    };
    let ts = generate(&config, seed).expect("generates");
    InterArrivalSeries::from_timestamps(&ts).expect("sorted")
}
