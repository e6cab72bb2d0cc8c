//! Event-driven simulation of FIFO queues with `c` exponential servers fed by
//! static or GAS-dynamic arrival streams, plus closed-form oracles and the
//! staffing cost optimizer.
//!
//! Measurement starts at the arrival of customer `warmup_arrivals` and the
//! time-weighted statistics end at the last arrival. Customers arriving inside
//! the window are followed until they depart, which is exact under FIFO since a
//! response time never depends on later arrivals. Busy periods are counted if
//! they start and end inside the window.

pub mod analytic;
pub mod cost;
pub mod stats;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{domain, Error, Result};
use crate::gas::{calibrate_unit_mean, GasParams, GasProcess};
use crate::rng::{RandomStream, Substream};
use stats::{Histogram, LevelOccupancy, MeasureSummary, SampleAccumulator, DEFAULT_RETAIN_LIMIT};

pub use analytic::{erlang_c, mm1_analytic, mmc_analytic, AnalyticMeasure, AnalyticSummary};
pub use cost::{analytic_cost_curve, cost_curve, cost_curve_from_summaries, CostCurve, CostModel, CostRow};

/// Default number of arrivals discarded before measurement.
pub const DEFAULT_WARMUP: u64 = 10_000;
/// Default pilot length for the unit-mean calibration of dynamic arrivals.
pub const DEFAULT_CALIBRATION_DRAWS: usize = 10_000_000;
/// Waiting lines beyond this length abort the run.
pub const MAX_WAITING: usize = 50_000_000;

/// How the arrival intercept is set before simulating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateNormalization {
    /// Shift `c` so the long-run mean inter-arrival time is one minute.
    #[default]
    UnitMean,
    /// Use the coefficients as given.
    AsGiven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueScenario {
    pub arrival: GasParams,
    pub servers: usize,
    /// Service rate per server, jobs per minute.
    pub service_rate: f64,
    /// Measured arrivals summed over replications.
    pub n_arrivals: u64,
    /// Arrivals discarded at the start of every replication.
    pub warmup_arrivals: u64,
    pub seed: u64,
    pub replications: u32,
    pub normalization: RateNormalization,
    pub calibration_draws: usize,
    /// Cap on retained samples per continuous measure.
    pub retain_limit: usize,
}

impl QueueScenario {
    pub fn new(arrival: GasParams, servers: usize, service_rate: f64, n_arrivals: u64, seed: u64) -> Self {
        Self {
            arrival,
            servers,
            service_rate,
            n_arrivals,
            warmup_arrivals: DEFAULT_WARMUP,
            seed,
            replications: 1,
            normalization: RateNormalization::UnitMean,
            calibration_draws: DEFAULT_CALIBRATION_DRAWS,
            retain_limit: DEFAULT_RETAIN_LIMIT,
        }
    }

    pub fn with_replications(mut self, replications: u32) -> Self {
        self.replications = replications;
        self
    }

    pub fn family(&self) -> Family {
        self.arrival.family()
    }

    /// Nominal utilization with unit arrival rate.
    pub fn utilization(&self) -> f64 {
        1.0 / (self.servers as f64 * self.service_rate)
    }

    pub fn validate(&self) -> Result<()> {
        self.arrival.validate()?;
        if self.servers == 0 {
            return domain("at least one server is required");
        }
        if !(self.service_rate > 0.0 && self.service_rate.is_finite()) {
            return domain(format!("service rate must be positive, got {}", self.service_rate));
        }
        let rho = self.utilization();
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        if self.replications == 0 {
            return domain("at least one replication is required");
        }
        if self.n_arrivals < self.replications as u64 * 2 {
            return domain("too few arrivals for the number of replications");
        }
        if self.warmup_arrivals >= self.n_arrivals {
            return domain("warm-up must be shorter than the run");
        }
        if !self.arrival.is_static() && self.normalization == RateNormalization::UnitMean && self.calibration_draws == 0
        {
            return domain("calibration_draws must be positive for dynamic arrivals");
        }
        Ok(())
    }
}

/// Per-replication digest kept for Monte Carlo error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationDigest {
    pub arrivals: u64,
    pub observed_time: f64,
    pub mean_number: f64,
    pub mean_response: f64,
    pub mean_busy_period: f64,
    pub number_pmf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSummary {
    pub servers: usize,
    pub service_rate: f64,
    /// Arrival parameters actually simulated (after normalization).
    pub arrival: GasParams,
    /// Mean inter-arrival time of the parameters as given, before normalization.
    pub nominal_mean_duration: f64,
    pub number_in_system: MeasureSummary,
    pub busy_period: MeasureSummary,
    pub response_time: MeasureSummary,
    /// Time-weighted distribution of the number in system.
    pub number_pmf: Vec<f64>,
    pub busy_period_histogram: Histogram,
    pub response_time_histogram: Histogram,
    pub arrivals: u64,
    pub observed_time: f64,
    pub replications: Vec<ReplicationDigest>,
}

impl PerformanceSummary {
    /// Realized arrival rate over the measurement window.
    pub fn arrival_rate(&self) -> f64 {
        self.arrivals as f64 / self.observed_time
    }

    /// Relative Little's-law gap `|L − λW| / L`.
    pub fn littles_law_gap(&self) -> f64 {
        let l = self.number_in_system.mean;
        (l - self.arrival_rate() * self.response_time.mean).abs() / l
    }

    /// Long-run fraction of time with at least `k` customers waiting.
    pub fn prob_waiting_at_least(&self, k: usize) -> f64 {
        prob_waiting_at_least(&self.number_pmf, self.servers, k)
    }

    /// Standard error of a per-replication statistic, weighted by observed time.
    pub fn replication_std_error(&self, stat: impl Fn(&ReplicationDigest) -> f64) -> Option<f64> {
        let r = self.replications.len();
        if r < 2 {
            return None;
        }
        let total: f64 = self.replications.iter().map(|d| d.observed_time).sum();
        let mean: f64 = self.replications.iter().map(|d| stat(d) * d.observed_time).sum::<f64>() / total;
        let var: f64 = self
            .replications
            .iter()
            .map(|d| (d.observed_time / total).powi(2) * (stat(d) - mean).powi(2))
            .sum::<f64>()
            * r as f64
            / (r - 1) as f64;
        Some(var.sqrt())
    }

    /// Warns if the realized arrival rate is more than 1% away from one.
    pub fn rate_diagnostic(&self) -> Option<String> {
        let rate = self.arrival_rate();
        ((rate - 1.0).abs() > 0.01).then(|| format!("realized arrival rate {rate:.4} differs from 1 by more than 1%"))
    }
}

pub(crate) fn prob_waiting_at_least(pmf: &[f64], servers: usize, k: usize) -> f64 {
    pmf.iter().skip(servers + k).sum()
}

#[derive(Clone, Copy)]
struct Departure {
    time: f64,
    arrived: f64,
    measured: bool,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Departure {}
impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Departure {
    // Reversed for a min-heap; ties broken by arrival time for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.arrived.total_cmp(&self.arrived))
    }
}

struct ReplicationStats {
    occupancy: LevelOccupancy,
    response: SampleAccumulator,
    busy: SampleAccumulator,
    arrivals: u64,
    observed_time: f64,
}

struct Replication {
    servers: usize,
    service_rate: f64,
    clock: f64,
    in_system: usize,
    waiting: VecDeque<(f64, bool)>,
    departures: BinaryHeap<Departure>,
    measuring: bool,
    last_event: f64,
    busy_start: Option<f64>,
    window_end: f64,
    services: RandomStream,
    stats: ReplicationStats,
}

impl Replication {
    #[inline]
    fn advance(&mut self, t: f64) {
        if self.measuring {
            self.stats.occupancy.add(self.in_system, t - self.last_event);
        }
        self.last_event = t;
        self.clock = t;
    }

    #[inline]
    fn start_service(&mut self, now: f64, arrived: f64, measured: bool) {
        let s = self.services.exponential() / self.service_rate;
        self.departures.push(Departure {
            time: now + s,
            arrived,
            measured,
        });
    }

    #[inline]
    fn depart(&mut self, d: Departure) {
        self.advance(d.time);
        if d.measured {
            self.stats.response.push(d.time - d.arrived);
        }
        if self.in_system == self.servers {
            if let Some(start) = self.busy_start.take() {
                if d.time <= self.window_end {
                    self.stats.busy.push(d.time - start);
                }
            }
        }
        self.in_system -= 1;
        if let Some((arrived, measured)) = self.waiting.pop_front() {
            self.start_service(d.time, arrived, measured);
        }
    }

    #[inline]
    fn arrive(&mut self, t: f64, measured: bool) -> Result<()> {
        self.advance(t);
        self.in_system += 1;
        if self.in_system == self.servers {
            self.busy_start = self.measuring.then_some(t);
        }
        if self.in_system <= self.servers {
            self.start_service(t, t, measured);
        } else {
            if self.waiting.len() >= MAX_WAITING {
                return Err(Error::Simulation(format!(
                    "waiting line exceeded {MAX_WAITING} customers"
                )));
            }
            self.waiting.push_back((t, measured));
        }
        Ok(())
    }
}

fn run_replication(s: &QueueScenario, params: &GasParams, index: u32, measured: u64) -> Result<ReplicationStats> {
    let mut arrivals_rng = RandomStream::substream(s.seed, Substream::Arrivals, index);
    let mut process = GasProcess::new(*params)?;
    let mut rep = Replication {
        servers: s.servers,
        service_rate: s.service_rate,
        clock: 0.0,
        in_system: 0,
        waiting: VecDeque::new(),
        departures: BinaryHeap::with_capacity(s.servers + 1),
        measuring: false,
        last_event: 0.0,
        busy_start: None,
        window_end: f64::INFINITY,
        services: RandomStream::substream(s.seed, Substream::Services, index),
        stats: ReplicationStats {
            occupancy: LevelOccupancy::default(),
            response: SampleAccumulator::new(s.retain_limit),
            busy: SampleAccumulator::new(s.retain_limit),
            arrivals: 0,
            observed_time: 0.0,
        },
    };
    let total = s.warmup_arrivals + measured;
    let mut next_arrival = process.next_duration(&mut arrivals_rng);
    let mut window_start = 0.0;
    for i in 0..total {
        // Departures at the same instant as an arrival are processed first.
        while let Some(d) = rep.departures.peek().copied() {
            if d.time > next_arrival {
                break;
            }
            rep.departures.pop();
            rep.depart(d);
        }
        let is_measured = i >= s.warmup_arrivals;
        if i == s.warmup_arrivals {
            rep.advance(next_arrival);
            rep.measuring = true;
            window_start = next_arrival;
        }
        rep.arrive(next_arrival, is_measured)?;
        if i + 1 < total {
            next_arrival += process.next_duration(&mut arrivals_rng);
        }
    }
    rep.measuring = false;
    rep.window_end = rep.clock;
    rep.stats.observed_time = rep.clock - window_start;
    rep.stats.arrivals = measured;
    // Drain: response times of customers still present; no further time weighting.
    while let Some(d) = rep.departures.pop() {
        rep.depart(d);
    }
    if !(rep.stats.observed_time > 0.0) {
        return Err(Error::Simulation("empty measurement window".into()));
    }
    Ok(rep.stats)
}

/// Arrival parameters after the scenario's normalization, with the mean
/// inter-arrival time of the parameters as given.
pub fn normalized_arrivals(s: &QueueScenario) -> Result<(GasParams, f64)> {
    match s.normalization {
        RateNormalization::UnitMean => {
            let mut rng = RandomStream::substream(s.seed, Substream::Calibration, 0);
            calibrate_unit_mean(&s.arrival, s.calibration_draws, &mut rng)
        }
        RateNormalization::AsGiven => {
            let mean = if s.arrival.is_static() {
                s.arrival.distribution_at(s.arrival.c).mean()
            } else {
                f64::NAN
            };
            Ok((s.arrival, mean))
        }
    }
}

/// Runs all replications of a scenario and merges them in index order.
pub fn simulate_queue(s: &QueueScenario) -> Result<PerformanceSummary> {
    s.validate()?;
    let (params, nominal_mean) = normalized_arrivals(s)?;
    let r = s.replications as u64;
    let base = s.n_arrivals / r;
    let extra = s.n_arrivals % r;
    let results: Vec<Result<ReplicationStats>> = (0..s.replications)
        .into_par_iter()
        .map(|i| {
            let measured = base + u64::from((i as u64) < extra);
            run_replication(s, &params, i, measured)
        })
        .collect();

    let mut occupancy = LevelOccupancy::default();
    let mut response = SampleAccumulator::new(s.retain_limit);
    let mut busy = SampleAccumulator::new(s.retain_limit);
    let mut digests = Vec::with_capacity(results.len());
    let mut arrivals = 0;
    let mut observed_time = 0.0;
    for res in results {
        let st = res?;
        let pmf = st.occupancy.pmf();
        digests.push(ReplicationDigest {
            arrivals: st.arrivals,
            observed_time: st.observed_time,
            mean_number: MeasureSummary::from_pmf(&pmf).mean,
            mean_response: st.response.mean(),
            mean_busy_period: st.busy.mean(),
            number_pmf: pmf,
        });
        occupancy.merge(&st.occupancy);
        response.merge(&st.response);
        busy.merge(&st.busy);
        arrivals += st.arrivals;
        observed_time += st.observed_time;
    }
    let number_pmf = occupancy.pmf();
    let summary = PerformanceSummary {
        servers: s.servers,
        service_rate: s.service_rate,
        arrival: params,
        nominal_mean_duration: nominal_mean,
        number_in_system: MeasureSummary::from_pmf(&number_pmf),
        busy_period: MeasureSummary::from_samples(&mut busy),
        response_time: MeasureSummary::from_samples(&mut response),
        number_pmf,
        busy_period_histogram: busy.histogram(),
        response_time_histogram: response.histogram(),
        arrivals,
        observed_time,
        replications: digests,
    };
    if let Some(msg) = summary.rate_diagnostic() {
        log::warn!("{msg}");
    }
    Ok(summary)
}
