use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gasqueue::estimation::model_table;
use gasqueue::queue_sim::{cost_curve, CostCurve, QueueScenario};
use gasqueue::seasonal::io::{parse_timestamp, read_durations, read_timestamps, write_adjusted, write_timestamps};
use gasqueue::seasonal::synthetic::generate;
use gasqueue::seasonal::{adjust_series, InterArrivalSeries, SplineFit};
use gasqueue::{Error as CoreError, PerformanceSummary};
use serde::Serialize;

use crate::config::{Format, PipelineConfig};
use crate::error::{CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(CoreError::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(CoreError::from)?;
    }
    w.flush().map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<T: Serialize>(config: &PipelineConfig, stem: &str, rows: &[T]) -> Result<PathBuf> {
    let path = config.out_dir.join(format!("{stem}.{}", config.format.extension()));
    match config.format {
        Format::Csv => write_csv(&path, rows)?,
        Format::Json => write_json(&path, &rows)?,
    }
    Ok(path)
}

fn announce(path: &Path) {
    println!("{}", path.display());
}

fn input_path(path: &Option<PathBuf>, command: &str) -> Result<PathBuf> {
    let path = path
        .clone()
        .ok_or_else(|| CliError::Input(format!("{command} needs an input file (--input)")))?;
    if !path.is_file() {
        return Err(CliError::Input(format!("input file {} does not exist", path.display())));
    }
    Ok(path)
}

pub fn sample(config: &PipelineConfig) -> Result<()> {
    let seed = config.require_seed("sample")?;
    let timestamps = generate(&config.sample, seed)?;
    log::info!("generated {} arrivals", timestamps.len());
    let path = config.out_dir.join("timestamps.csv");
    write_timestamps(create(&path)?, &timestamps)?;
    announce(&path);
    Ok(())
}

#[derive(Serialize)]
struct AdjustDiagnostics<'a> {
    n_obs: usize,
    zero_replacements: usize,
    knot_spacing: f64,
    adjusted_mean: f64,
    fit: &'a SplineFit,
}

pub fn adjust(config: &PipelineConfig) -> Result<()> {
    let cfg = &config.adjust;
    let path = input_path(&cfg.input, "adjust")?;
    let series = match &cfg.duration_column {
        Some(column) => {
            let start = cfg.start.as_deref().unwrap_or("2018-06-11T00:00");
            let start = parse_timestamp(start)
                .ok_or_else(|| CliError::Input(format!("cannot parse start timestamp '{start}'")))?;
            InterArrivalSeries::from_durations(start, &read_durations(open(&path)?, column)?)?
        }
        None => {
            let mut ts = read_timestamps(open(&path)?, &cfg.timestamp_column)?;
            if cfg.sort {
                ts.sort();
            }
            InterArrivalSeries::from_timestamps(&ts)?
        }
    };
    if series.zero_replacements > 0 {
        log::info!("replaced {} zero durations", series.zero_replacements);
    }
    let adjustment = adjust_series(&series, cfg.knot_spacing)?;
    if adjustment.fit.diagnostics.rank_deficient {
        log::warn!("spline design is rank deficient; coefficients are minimum-norm");
    }
    let out = config.out_dir.join("adjusted.csv");
    write_adjusted(create(&out)?, &series, &adjustment)?;
    let diag = config.out_dir.join("adjust_diagnostics.json");
    let n = adjustment.adjusted.len();
    write_json(
        &diag,
        &AdjustDiagnostics {
            n_obs: n,
            zero_replacements: series.zero_replacements,
            knot_spacing: cfg.knot_spacing,
            adjusted_mean: adjustment.adjusted.iter().sum::<f64>() / n as f64,
            fit: &adjustment.fit,
        },
    )?;
    announce(&out);
    announce(&diag);
    Ok(())
}

pub fn fit(config: &PipelineConfig) -> Result<()> {
    let path = input_path(&config.fit.input, "fit")?;
    let series = read_durations(open(&path)?, &config.fit.column)?;
    let report = model_table(&series)?;
    let out = config.out_dir.join(format!("models.{}", config.format.extension()));
    match config.format {
        Format::Csv => report.write_csv(create(&out)?)?,
        Format::Json => write_json(&out, &report)?,
    }
    announce(&out);
    if let Some(best) = report.best_row() {
        log::info!("lowest AIC: {} ({:.2})", best.spec.label(), best.aic);
    }
    let failed: Vec<_> = report.rows.iter().filter(|r| !r.converged).collect();
    for r in &failed {
        log::warn!(
            "{} did not converge: {}",
            r.spec.label(),
            r.message.as_deref().unwrap_or("no reason given")
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Convergence(failed.len()))
    }
}

#[derive(Debug, Serialize)]
struct SimulationRow {
    scenario: String,
    model: String,
    servers: usize,
    service_rate: f64,
    status: &'static str,
    number_mean: Option<f64>,
    number_sd: Option<f64>,
    number_q95: Option<f64>,
    busy_mean: Option<f64>,
    busy_sd: Option<f64>,
    busy_q95: Option<f64>,
    response_mean: Option<f64>,
    response_sd: Option<f64>,
    response_q95: Option<f64>,
    littles_law_gap: Option<f64>,
    reason: String,
}

impl SimulationRow {
    fn new(scenario: String, model: &str, servers: usize, service_rate: f64) -> Self {
        Self {
            scenario,
            model: model.to_string(),
            servers,
            service_rate,
            status: "skipped",
            number_mean: None,
            number_sd: None,
            number_q95: None,
            busy_mean: None,
            busy_sd: None,
            busy_q95: None,
            response_mean: None,
            response_sd: None,
            response_q95: None,
            littles_law_gap: None,
            reason: String::new(),
        }
    }

    fn fill(&mut self, s: &PerformanceSummary) {
        self.status = "ok";
        let (n, b, r) = (&s.number_in_system, &s.busy_period, &s.response_time);
        self.number_mean = Some(n.mean);
        self.number_sd = Some(n.sd);
        self.number_q95 = Some(n.q95);
        self.busy_mean = Some(b.mean);
        self.busy_sd = Some(b.sd);
        self.busy_q95 = Some(b.q95);
        self.response_mean = Some(r.mean);
        self.response_sd = Some(r.sd);
        self.response_q95 = Some(r.q95);
        self.littles_law_gap = Some(s.littles_law_gap());
    }
}

#[derive(Serialize)]
struct HistogramFile<'a> {
    scenario: &'a str,
    model: &'a str,
    number_pmf: &'a [f64],
    busy_period: &'a gasqueue::queue_sim::stats::Histogram,
    response_time: &'a gasqueue::queue_sim::stats::Histogram,
}

pub fn simulate(config: &PipelineConfig) -> Result<()> {
    let seed = config.require_seed("simulate")?;
    let cfg = &config.simulate;
    let models = cfg
        .models
        .iter()
        .map(|name| Ok((name.clone(), config.arrival_model(name)?.params()?)))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(String, usize, f64)> = cfg
        .service_rates
        .iter()
        .map(|&mu| (format!("mu_{mu}"), 1, mu))
        .chain(
            cfg.servers
                .iter()
                .map(|&c| (format!("c_{c}"), c, cfg.multi_server_rate)),
        )
        .collect();
    let hist_dir = config.out_dir.join("histograms");
    std::fs::create_dir_all(&hist_dir).map_err(|source| CliError::Write {
        path: hist_dir.clone(),
        source,
    })?;

    let mut rows = Vec::new();
    let mut skipped = 0;
    for (label, servers, mu) in &grid {
        for (name, params) in &models {
            let mut row = SimulationRow::new(label.clone(), name, *servers, *mu);
            let scenario = QueueScenario {
                warmup_arrivals: cfg.warmup,
                normalization: cfg.normalization,
                ..QueueScenario::new(*params, *servers, *mu, cfg.arrivals, seed).with_replications(cfg.replications)
            };
            log::info!("simulating {label} {name}");
            match gasqueue::simulate_queue(&scenario) {
                Ok(s) => {
                    if let Some(msg) = s.rate_diagnostic() {
                        log::warn!("{label} {name}: {msg}");
                    }
                    row.fill(&s);
                    let path = hist_dir.join(format!("{label}_{name}.json"));
                    write_json(
                        &path,
                        &HistogramFile {
                            scenario: label,
                            model: name,
                            number_pmf: &s.number_pmf,
                            busy_period: &s.busy_period_histogram,
                            response_time: &s.response_time_histogram,
                        },
                    )?;
                }
                Err(e @ CoreError::Unstable { .. }) => {
                    skipped += 1;
                    row.reason = e.to_string();
                }
                Err(e) => return Err(e.into()),
            }
            rows.push(row);
        }
    }
    announce(&write_rows(config, "simulation", &rows)?);
    if skipped > 0 {
        return Err(CliError::Unstable(skipped));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CostComparisonRow {
    servers: usize,
    static_total: Option<f64>,
    static_long_queue_probability: Option<f64>,
    static_std_error: Option<f64>,
    dynamic_total: Option<f64>,
    dynamic_long_queue_probability: Option<f64>,
    dynamic_std_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CostSummary<'a> {
    static_model: &'a str,
    dynamic_model: &'a str,
    static_optimal_servers: usize,
    static_optimal_cost: f64,
    dynamic_optimal_servers: usize,
    dynamic_optimal_cost: f64,
    /// Dynamic-model cost of the static recommendation over the dynamic optimum.
    dynamic_cost_at_static_optimum: Option<f64>,
    misspecification_penalty: Option<f64>,
    static_curve: &'a CostCurve,
    dynamic_curve: &'a CostCurve,
}

pub fn optimize(config: &PipelineConfig) -> Result<()> {
    let seed = config.require_seed("optimize")?;
    let cfg = &config.optimize;
    let curve = |name: &str| -> Result<CostCurve> {
        let params = config.arrival_model(name)?.params()?;
        let base = QueueScenario {
            warmup_arrivals: cfg.warmup,
            normalization: cfg.normalization,
            ..QueueScenario::new(params, 1, cfg.service_rate, cfg.arrivals, seed).with_replications(cfg.replications)
        };
        log::info!("cost curve for {name}");
        Ok(cost_curve(&base, cfg.servers.iter().copied(), cfg.cost)?)
    };
    let st = curve(&cfg.static_model)?;
    let dy = curve(&cfg.dynamic_model)?;

    let stable = |r: &gasqueue::queue_sim::CostRow, v: f64| r.stable.then_some(v);
    let rows: Vec<CostComparisonRow> = st
        .rows
        .iter()
        .zip(&dy.rows)
        .map(|(s, d)| CostComparisonRow {
            servers: s.servers,
            static_total: stable(s, s.total),
            static_long_queue_probability: stable(s, s.long_queue_probability),
            static_std_error: s.std_error,
            dynamic_total: stable(d, d.total),
            dynamic_long_queue_probability: stable(d, d.long_queue_probability),
            dynamic_std_error: d.std_error,
        })
        .collect();
    announce(&write_rows(config, "cost_curve", &rows)?);

    let at_static = dy.row(st.optimal_servers).filter(|r| r.stable).map(|r| r.total);
    let summary = CostSummary {
        static_model: &cfg.static_model,
        dynamic_model: &cfg.dynamic_model,
        static_optimal_servers: st.optimal_servers,
        static_optimal_cost: st.optimal_cost,
        dynamic_optimal_servers: dy.optimal_servers,
        dynamic_optimal_cost: dy.optimal_cost,
        dynamic_cost_at_static_optimum: at_static,
        misspecification_penalty: at_static.map(|c| c / dy.optimal_cost - 1.0),
        static_curve: &st,
        dynamic_curve: &dy,
    };
    let path = config.out_dir.join("cost_summary.json");
    write_json(&path, &summary)?;
    announce(&path);
    Ok(())
}
