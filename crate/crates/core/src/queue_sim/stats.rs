//! Accumulators for simulation output.
//!
//! Continuous measures keep pooled moments, a fixed-width histogram and, up to
//! a cap, the raw samples so that quantiles are exact order statistics. Past
//! the cap the samples are dropped and quantiles come from the histogram.
//! Merging is associative and the result does not depend on how the samples
//! were split, apart from floating-point rounding of the moments.

use serde::{Deserialize, Serialize};

/// Width of the histogram bins for time measures, in minutes.
pub const TIME_BIN_WIDTH: f64 = 0.1;

/// Default cap on retained samples per measure across all replications.
pub const DEFAULT_RETAIN_LIMIT: usize = 10_000_000;

/// Smallest `k` with `cdf(k) >= p` for a probability mass function.
pub fn pmf_quantile(pmf: &[f64], p: f64) -> usize {
    let mut acc = 0.0;
    for (k, m) in pmf.iter().enumerate() {
        acc += m;
        if acc >= p - 1e-12 {
            return k;
        }
    }
    pmf.len().saturating_sub(1)
}

/// Order-statistic quantile: the `⌈p n⌉`-th smallest sample.
pub fn sample_quantile(samples: &mut [f64], p: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let n = samples.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
    let (_, v, _) = samples.select_nth_unstable_by(rank, |a, b| a.total_cmp(b));
    *v
}

/// Moments, histogram and (optionally) raw samples of a nonnegative measure.
#[derive(Debug, Clone)]
pub struct SampleAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    max: f64,
    bins: Vec<u64>,
    samples: Option<Vec<f64>>,
    retain_limit: usize,
}

impl SampleAccumulator {
    pub fn new(retain_limit: usize) -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            max: 0.0,
            bins: Vec::new(),
            samples: Some(Vec::new()),
            retain_limit,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        if x > self.max {
            self.max = x;
        }
        let bin = (x / TIME_BIN_WIDTH) as usize;
        if bin >= self.bins.len() {
            self.bins.resize(bin + 1, 0);
        }
        self.bins[bin] += 1;
        if let Some(s) = self.samples.as_mut() {
            if s.len() < self.retain_limit {
                s.push(x);
            } else {
                self.samples = None;
            }
        }
    }

    /// Chan et al. pooled update.
    pub fn merge(&mut self, other: &SampleAccumulator) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n as f64;
        self.count = n;
        self.max = self.max.max(other.max);
        if other.bins.len() > self.bins.len() {
            self.bins.resize(other.bins.len(), 0);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.samples = match (self.samples.take(), other.samples.as_ref()) {
            (Some(mut a), Some(b)) if a.len() + b.len() <= self.retain_limit => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample standard deviation (divisor n − 1).
    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn exact_quantiles(&self) -> bool {
        self.samples.is_some()
    }

    pub fn quantile(&mut self, p: f64) -> f64 {
        if let Some(s) = self.samples.as_mut() {
            return sample_quantile(s, p);
        }
        // Histogram: linear interpolation inside the bin holding the target rank.
        let target = p * self.count as f64;
        let mut acc = 0.0;
        for (k, &c) in self.bins.iter().enumerate() {
            let next = acc + c as f64;
            if next >= target && c > 0 {
                let frac = (target - acc) / c as f64;
                return (k as f64 + frac) * TIME_BIN_WIDTH;
            }
            acc = next;
        }
        self.max
    }

    pub fn histogram(&self) -> Histogram {
        let total = self.count.max(1) as f64;
        Histogram {
            bin_width: TIME_BIN_WIDTH,
            mass: self.bins.iter().map(|c| *c as f64 / total).collect(),
        }
    }
}

/// Time spent at each integer level of a piecewise-constant process.
#[derive(Debug, Clone, Default)]
pub struct LevelOccupancy {
    time: Vec<f64>,
}

impl LevelOccupancy {
    #[inline]
    pub fn add(&mut self, level: usize, dt: f64) {
        if level >= self.time.len() {
            self.time.resize(level + 1, 0.0);
        }
        self.time[level] += dt;
    }

    pub fn merge(&mut self, other: &LevelOccupancy) {
        if other.time.len() > self.time.len() {
            self.time.resize(other.time.len(), 0.0);
        }
        for (a, b) in self.time.iter_mut().zip(&other.time) {
            *a += b;
        }
    }

    pub fn total_time(&self) -> f64 {
        self.time.iter().sum()
    }

    pub fn pmf(&self) -> Vec<f64> {
        let total = self.total_time();
        if total <= 0.0 {
            return vec![];
        }
        self.time.iter().map(|t| t / total).collect()
    }
}

/// Normalized histogram with fixed-width bins starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Fraction of observations in each bin; sums to one.
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Mean implied by the histogram with mass at bin midpoints.
    pub fn midpoint_mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| (k as f64 + 0.5) * self.bin_width * m)
            .sum()
    }
}

/// Mean, standard deviation and 95% quantile of one measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub mean: f64,
    pub sd: f64,
    pub q95: f64,
    /// Number of samples, or zero for time-weighted measures.
    pub count: u64,
    /// Whether `q95` is an exact order statistic (always true for time-weighted
    /// integer measures).
    pub exact_quantile: bool,
}

impl MeasureSummary {
    pub fn from_samples(acc: &mut SampleAccumulator) -> Self {
        Self {
            mean: acc.mean(),
            sd: acc.sd(),
            q95: acc.quantile(0.95),
            count: acc.count(),
            exact_quantile: acc.exact_quantiles(),
        }
    }

    pub fn from_pmf(pmf: &[f64]) -> Self {
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        Self {
            mean,
            sd: (second - mean * mean).max(0.0).sqrt(),
            q95: pmf_quantile(pmf, 0.95) as f64,
            count: 0,
            exact_quantile: true,
        }
    }
}
