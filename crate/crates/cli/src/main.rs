//! `gasqueue`: seasonal adjustment, GAS duration model fitting and queue
//! simulation from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, PipelineConfig};
use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gasqueue", version, about)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every random substream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving the output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic arrival timestamps.
    Sample(SampleArgs),
    /// Remove the weekly pattern and trend from inter-arrival times.
    Adjust(AdjustArgs),
    /// Fit the eight duration models and compare them by AIC.
    Fit(FitArgs),
    /// Simulate queues over the service-rate and server grids.
    Simulate(SimulateArgs),
    /// Cost curves and optimal staffing under static and dynamic arrivals.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    weeks: Option<u32>,
    /// Expected number of arrivals over the horizon.
    #[arg(long)]
    events: Option<f64>,
    /// Multiplier on the calendar profile; 0 removes seasonality.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Arrival rate at the end of the horizon relative to the start.
    #[arg(long)]
    trend_growth: Option<f64>,
    /// Use i.i.d. exponential residual durations.
    #[arg(long)]
    static_residuals: bool,
}

#[derive(Debug, Args)]
struct AdjustArgs {
    /// CSV with a timestamp or duration column.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Timestamp column name.
    #[arg(long)]
    column: Option<String>,
    /// Read precomputed durations from this column.
    #[arg(long, conflicts_with = "column")]
    durations_column: Option<String>,
    /// First timestamp when reading durations.
    #[arg(long, requires = "durations_column")]
    start: Option<String>,
    #[arg(long)]
    knot_spacing: Option<f64>,
    /// Sort timestamps instead of rejecting unsorted input.
    #[arg(long)]
    sort: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV holding the adjusted durations.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Measured arrivals per scenario, summed over replications.
    #[arg(long)]
    arrivals: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Arrival models by name.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Service rates of the single-server grid.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Server counts of the multi-server grid.
    #[arg(long, value_delimiter = ',')]
    servers: Option<Vec<usize>>,
    /// Simulate the arrival coefficients without rescaling to unit mean.
    #[arg(long)]
    as_given: bool,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    arrivals: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    servers: Option<Vec<usize>>,
    #[arg(long)]
    static_model: Option<String>,
    #[arg(long)]
    dynamic_model: Option<String>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    fn resolve(self) -> Result<(PipelineConfig, Command)> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if self.seed.is_some() {
            config.seed = self.seed;
        }
        set(&mut config.out_dir, self.out_dir);
        set(&mut config.format, self.format);
        match &self.command {
            Command::Sample(a) => {
                let s = &mut config.sample;
                set(&mut s.weeks, a.weeks);
                set(&mut s.expected_events, a.events);
                set(&mut s.seasonal_amplitude, a.amplitude);
                set(&mut s.trend_growth, a.trend_growth);
                if a.static_residuals {
                    s.residual = gasqueue::GasParams::static_model(0.0, 1.0, 1.0)?;
                }
            }
            Command::Adjust(a) => {
                let s = &mut config.adjust;
                if a.input.is_some() {
                    s.input = a.input.clone();
                }
                set(&mut s.timestamp_column, a.column.clone());
                if a.durations_column.is_some() {
                    s.duration_column = a.durations_column.clone();
                    s.start = a.start.clone();
                }
                set(&mut s.knot_spacing, a.knot_spacing);
                s.sort |= a.sort;
            }
            Command::Fit(a) => {
                if a.input.is_some() {
                    config.fit.input = a.input.clone();
                }
                set(&mut config.fit.column, a.column.clone());
            }
            Command::Simulate(a) => {
                let s = &mut config.simulate;
                set(&mut s.arrivals, a.arrivals);
                set(&mut s.replications, a.replications);
                set(&mut s.models, a.models.clone());
                set(&mut s.service_rates, a.mu.clone());
                set(&mut s.servers, a.servers.clone());
                if a.as_given {
                    s.normalization = gasqueue::RateNormalization::AsGiven;
                }
            }
            Command::Optimize(a) => {
                let s = &mut config.optimize;
                set(&mut s.arrivals, a.arrivals);
                set(&mut s.replications, a.replications);
                set(&mut s.servers, a.servers.clone());
                set(&mut s.static_model, a.static_model.clone());
                set(&mut s.dynamic_model, a.dynamic_model.clone());
            }
        }
        Ok((config, self.command))
    }
}

fn run(cli: Cli) -> Result<()> {
    let (config, command) = cli.resolve()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Write {
        path: config.out_dir.clone(),
        source,
    })?;
    match command {
        Command::Sample(_) => commands::sample(&config),
        Command::Adjust(_) => commands::adjust(&config),
        Command::Fit(_) => commands::fit(&config),
        Command::Simulate(_) => commands::simulate(&config),
        Command::Optimize(_) => commands::optimize(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
