//! Staffing costs: a per-server rate plus a penalty rate while the waiting
//! line is long.

use serde::{Deserialize, Serialize};

use super::{mmc_analytic, simulate_queue, PerformanceSummary, QueueScenario};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Cost of one server per minute.
    pub server_cost: f64,
    /// Cost per minute while the waiting line is long.
    pub queue_cost: f64,
    /// The line is long when at least this many customers are waiting.
    pub threshold: usize,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            server_cost: 10.0,
            queue_cost: 3000.0,
            threshold: 30,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.server_cost > 0.0) || !(self.queue_cost >= 0.0) || !self.queue_cost.is_finite() {
            return domain(format!("cost rates must be positive, got {self:?}"));
        }
        if self.threshold == 0 {
            return domain("queue threshold must be positive");
        }
        Ok(())
    }

    pub fn cost(&self, servers: usize, long_queue_probability: f64) -> f64 {
        servers as f64 * self.server_cost + self.queue_cost * long_queue_probability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub servers: usize,
    pub stable: bool,
    pub server_cost: f64,
    /// Long-run fraction of time the waiting line is long.
    pub long_queue_probability: f64,
    pub queue_cost: f64,
    pub total: f64,
    /// Monte Carlo standard error of `total`, when replications allow one.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub model: CostModel,
    pub rows: Vec<CostRow>,
    pub optimal_servers: usize,
    pub optimal_cost: f64,
}

impl CostCurve {
    pub fn row(&self, servers: usize) -> Option<&CostRow> {
        self.rows.iter().find(|r| r.servers == servers)
    }

    fn from_rows(model: CostModel, mut rows: Vec<CostRow>) -> Result<Self> {
        rows.sort_by_key(|r| r.servers);
        let best = rows
            .iter()
            .filter(|r| r.stable)
            .fold(None::<&CostRow>, |best, r| match best {
                Some(b) if b.total <= r.total => Some(b),
                _ => Some(r),
            })
            .ok_or_else(|| Error::Domain("no stable server count in the cost curve".into()))?;
        Ok(Self {
            model,
            optimal_servers: best.servers,
            optimal_cost: best.total,
            rows,
        })
    }
}

fn unstable_row(servers: usize) -> CostRow {
    CostRow {
        servers,
        stable: false,
        server_cost: f64::NAN,
        long_queue_probability: f64::NAN,
        queue_cost: f64::NAN,
        total: f64::NAN,
        std_error: None,
    }
}

/// Cost curve from already simulated scenarios.
pub fn cost_curve_from_summaries(summaries: &[PerformanceSummary], model: CostModel) -> Result<CostCurve> {
    model.validate()?;
    let rows = summaries
        .iter()
        .map(|s| {
            let p = s.prob_waiting_at_least(model.threshold);
            let k = s.servers + model.threshold;
            let se = s.replication_std_error(|d| d.number_pmf.iter().skip(k).sum());
            CostRow {
                servers: s.servers,
                stable: true,
                server_cost: s.servers as f64 * model.server_cost,
                long_queue_probability: p,
                queue_cost: model.queue_cost * p,
                total: model.cost(s.servers, p),
                std_error: se.map(|e| e * model.queue_cost),
            }
        })
        .collect();
    CostCurve::from_rows(model, rows)
}

/// Simulates `base` for every server count and builds the cost curve.
/// Unstable server counts are kept as rows marked unstable.
pub fn cost_curve(
    base: &QueueScenario,
    servers: impl IntoIterator<Item = usize>,
    model: CostModel,
) -> Result<CostCurve> {
    model.validate()?;
    let mut rows = Vec::new();
    for c in servers {
        let s = QueueScenario {
            servers: c,
            ..base.clone()
        };
        match simulate_queue(&s) {
            Ok(summary) => rows.extend(cost_curve_from_summaries(&[summary], model)?.rows),
            Err(Error::Unstable { .. }) => rows.push(unstable_row(c)),
            Err(e) => return Err(e),
        }
    }
    CostCurve::from_rows(model, rows)
}

/// Cost curve for Poisson arrivals from the Erlang-C tail.
pub fn analytic_cost_curve(
    lambda: f64,
    mu: f64,
    servers: impl IntoIterator<Item = usize>,
    model: CostModel,
) -> Result<CostCurve> {
    model.validate()?;
    let mut rows = Vec::new();
    for c in servers {
        match mmc_analytic(lambda, mu, c) {
            Ok(a) => {
                let p = a.prob_queue_at_least(model.threshold as u32);
                rows.push(CostRow {
                    servers: c,
                    stable: true,
                    server_cost: c as f64 * model.server_cost,
                    long_queue_probability: p,
                    queue_cost: model.queue_cost * p,
                    total: model.cost(c, p),
                    std_error: Some(0.0),
                });
            }
            Err(Error::Unstable { .. }) => rows.push(unstable_row(c)),
            Err(e) => return Err(e),
        }
    }
    CostCurve::from_rows(model, rows)
}
