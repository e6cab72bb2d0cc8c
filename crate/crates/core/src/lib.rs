//! Score-driven duration models for clustered arrivals and their effect on
//! queueing systems.
//!
//! * [`distributions`]: the generalized gamma family on a log-scale.
//! * [`gas`]: score-driven dynamics of the log-scale, filtering and simulation.
//! * [`estimation`]: maximum likelihood for the eight nested models.
//! * [`seasonal`]: weekly spline adjustment of raw arrival timestamps.
//! * [`queue_sim`]: discrete-event queue simulation, Markovian oracles and
//!   staffing costs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod gas;
pub mod queue_sim;
pub mod rng;
pub mod seasonal;

pub use distributions::{Family, GenGammaParams};
pub use error::{Error, Result};
pub use estimation::{fit, model_table, ComparisonReport, Dynamics, FittedModel, ModelSpec};
pub use gas::{gas_filter, gas_simulate, GasParams, GasProcess};
pub use queue_sim::{simulate_queue, CostCurve, CostModel, PerformanceSummary, QueueScenario, RateNormalization};
pub use rng::{RandomStream, Substream};
pub use seasonal::{adjust_series, InterArrivalSeries, SplineFit};
