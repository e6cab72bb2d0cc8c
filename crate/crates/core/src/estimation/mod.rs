//! Maximum-likelihood fitting of the static and dynamic duration models.
//!
//! Eight variants are supported: {static, dynamic} × {exponential, Weibull,
//! gamma, generalized gamma}. Free parameters are optimized in an unconstrained
//! space (`ψ = e^u`, `φ = e^v`, `b = tanh w`, `c` and `a` as is), first by
//! Nelder–Mead from a small grid of starting points, then by a BFGS polish.

pub mod optim;

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{domain, Result};
use crate::gas::{GasParams, PreparedSeries};
use optim::{bfgs, hessian, nelder_mead, BfgsOptions, NelderMeadOptions};

/// Fits whose shape estimate exceeds this are reported as non-converged.
pub const SHAPE_LIMIT: f64 = 1e3;

const GRID_A: [f64; 3] = [0.01, 0.05, 0.1];
const GRID_B: [f64; 2] = [0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    Static,
    Dynamic,
}

impl Dynamics {
    pub fn label(self) -> &'static str {
        match self {
            Dynamics::Static => "static",
            Dynamics::Dynamic => "dynamic",
        }
    }
}

impl std::fmt::Display for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Dynamics {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_end_matches('.') {
            "static" => Ok(Dynamics::Static),
            "dynamic" | "dyn" => Ok(Dynamics::Dynamic),
            other => domain(format!("unknown dynamics '{other}'")),
        }
    }
}

/// One of the eight model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dynamics: Dynamics,
    pub family: Family,
}

impl ModelSpec {
    pub const fn new(dynamics: Dynamics, family: Family) -> Self {
        Self { dynamics, family }
    }

    /// All variants in report order: static rows first, families from the most
    /// restricted to the most general.
    pub fn all() -> [ModelSpec; 8] {
        let mut out = [ModelSpec::new(Dynamics::Static, Family::Exponential); 8];
        for (i, d) in [Dynamics::Static, Dynamics::Dynamic].into_iter().enumerate() {
            for (j, f) in Family::ALL.into_iter().enumerate() {
                out[4 * i + j] = ModelSpec::new(d, f);
            }
        }
        out
    }

    /// Number of free parameters.
    pub fn free_params(&self) -> usize {
        let dyn_extra = match self.dynamics {
            Dynamics::Static => 0,
            Dynamics::Dynamic => 2,
        };
        1 + dyn_extra + self.family.shape_count()
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.dynamics, self.family)
    }

    /// Maps an unconstrained vector to natural parameters, filling fixed values.
    fn decode(&self, u: &[f64]) -> GasParams {
        let mut it = u.iter().copied();
        let c = it.next().unwrap_or(0.0);
        let (b, a) = match self.dynamics {
            Dynamics::Static => (0.0, 0.0),
            Dynamics::Dynamic => {
                let b = it.next().unwrap_or(0.0).tanh();
                (b, it.next().unwrap_or(0.0))
            }
        };
        let psi = if self.family.psi_free() {
            it.next().unwrap_or(0.0).exp()
        } else {
            1.0
        };
        let phi = if self.family.phi_free() {
            it.next().unwrap_or(0.0).exp()
        } else {
            1.0
        };
        GasParams { c, b, a, psi, phi }
    }

    /// Inverse of [`decode`](Self::decode) for the free coordinates of `p`.
    fn encode(&self, p: &GasParams) -> Vec<f64> {
        let mut u = vec![p.c];
        if self.dynamics == Dynamics::Dynamic {
            u.push(p.b.clamp(-0.999_999, 0.999_999).atanh());
            u.push(p.a);
        }
        if self.family.psi_free() {
            u.push(p.psi.ln());
        }
        if self.family.phi_free() {
            u.push(p.phi.ln());
        }
        u
    }

    /// Free parameters of `p` in natural space, in the order (c, b, a, ψ, φ).
    fn natural(&self, p: &GasParams) -> Vec<f64> {
        let mut v = vec![p.c];
        if self.dynamics == Dynamics::Dynamic {
            v.push(p.b);
            v.push(p.a);
        }
        if self.family.psi_free() {
            v.push(p.psi);
        }
        if self.family.phi_free() {
            v.push(p.phi);
        }
        v
    }

    fn natural_params(&self, v: &[f64]) -> GasParams {
        let mut it = v.iter().copied();
        let c = it.next().unwrap_or(0.0);
        let (b, a) = match self.dynamics {
            Dynamics::Static => (0.0, 0.0),
            Dynamics::Dynamic => (it.next().unwrap_or(0.0), it.next().unwrap_or(0.0)),
        };
        let psi = if self.family.psi_free() {
            it.next().unwrap_or(1.0)
        } else {
            1.0
        };
        let phi = if self.family.phi_free() {
            it.next().unwrap_or(1.0)
        } else {
            1.0
        };
        GasParams { c, b, a, psi, phi }
    }

    /// Projects arbitrary parameters onto this spec's constraints.
    fn restrict(&self, p: &GasParams) -> GasParams {
        self.decode(&self.encode(p))
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.dynamics, self.family)
    }
}

/// Standard errors from the inverse observed information; `None` for fixed
/// parameters or when the Hessian is not negative definite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub c: Option<f64>,
    pub b: Option<f64>,
    pub a: Option<f64>,
    pub psi: Option<f64>,
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: GasParams,
    pub loglik: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub std_errors: StdErrors,
    pub evaluations: usize,
    /// Why the fit is flagged, when it is.
    pub message: Option<String>,
}

/// Akaike information criterion `2k − 2 ℓ`.
pub fn aic_value(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub fn aic(m: &FittedModel) -> f64 {
    aic_value(m.loglik, m.spec.free_params())
}

fn validate_series(series: &[f64]) -> Result<PreparedSeries> {
    if series.is_empty() {
        return domain("cannot fit an empty series");
    }
    PreparedSeries::new(series)
}

/// Fits `spec` by maximum likelihood.
///
/// Dynamic fits are seeded from the static fit of the same family.
pub fn fit(series: &[f64], spec: ModelSpec) -> Result<FittedModel> {
    let data = validate_series(series)?;
    let mut seeds = Vec::new();
    if spec.dynamics == Dynamics::Dynamic {
        let st = fit_prepared(&data, ModelSpec::new(Dynamics::Static, spec.family), &[]);
        seeds.push(st.params);
    }
    Ok(fit_prepared(&data, spec, &seeds))
}

/// Fits `spec` with additional starting points, typically optima of nested models.
pub fn fit_with_seeds(series: &[f64], spec: ModelSpec, seeds: &[GasParams]) -> Result<FittedModel> {
    let data = validate_series(series)?;
    Ok(fit_prepared(&data, spec, seeds))
}

fn starting_points(data: &PreparedSeries, spec: ModelSpec, seeds: &[GasParams]) -> Vec<GasParams> {
    let mean_ln = {
        // ln of the sample mean, via the cached logs
        let s: f64 = data.ln_values().iter().map(|l| l.exp()).sum();
        (s / data.len() as f64).ln()
    };
    let mut starts = vec![GasParams {
        c: mean_ln,
        b: 0.0,
        a: 0.0,
        psi: 1.0,
        phi: 1.0,
    }];
    starts.extend(seeds.iter().map(|s| spec.restrict(s)));
    if spec.dynamics == Dynamics::Dynamic {
        // Seeds the grid from the static long-run level of the best seed.
        let base = seeds.iter().find(|s| s.is_static()).copied().unwrap_or(starts[0]);
        for &b in &GRID_B {
            for &a in &GRID_A {
                starts.push(spec.restrict(&GasParams {
                    c: base.c * (1.0 - b),
                    b,
                    a,
                    ..base
                }));
            }
        }
    }
    starts
}

fn fit_prepared(data: &PreparedSeries, spec: ModelSpec, seeds: &[GasParams]) -> FittedModel {
    let n = data.len();
    let k = spec.free_params();

    if spec == ModelSpec::new(Dynamics::Static, Family::Exponential) {
        let mean: f64 = data.ln_values().iter().map(|l| l.exp()).sum::<f64>() / n as f64;
        let params = GasParams {
            c: mean.ln(),
            b: 0.0,
            a: 0.0,
            psi: 1.0,
            phi: 1.0,
        };
        let loglik = data.loglik(&params);
        return finish(data, spec, params, loglik, true, 1, None);
    }

    let objective = |u: &[f64]| -> f64 {
        let p = spec.decode(u);
        if p.psi > 1e6 || p.phi > 1e6 || p.psi < 1e-8 || p.phi < 1e-8 {
            return f64::INFINITY;
        }
        -data.loglik(&p)
    };

    let starts = starting_points(data, spec, seeds);
    let nm_opts = NelderMeadOptions::default();
    let mut evaluations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let u0 = spec.encode(s);
        let m = nelder_mead(objective, &u0, &nm_opts);
        evaluations += m.evaluations;
        // Polishing from each start is cheap relative to the simplex search.
        let polished = bfgs(objective, &m.x, &BfgsOptions::default());
        evaluations += polished.evaluations;
        let (x, v) = if polished.value <= m.value {
            (polished.x, polished.value)
        } else {
            (m.x, m.value)
        };
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    let (x, value) = best.expect("at least one starting point");
    let final_polish = bfgs(objective, &x, &BfgsOptions::default());
    evaluations += final_polish.evaluations;
    let (x, value) = if final_polish.value <= value {
        (final_polish.x, final_polish.value)
    } else {
        (x, value)
    };
    let params = spec.decode(&x);
    let loglik = -value;

    let mut converged = loglik.is_finite();
    let mut message = None;
    if !loglik.is_finite() {
        message = Some("log-likelihood not finite at any starting point".to_string());
    } else if params.psi > SHAPE_LIMIT || params.phi > SHAPE_LIMIT {
        converged = false;
        message = Some(format!(
            "shape estimate degenerate (psi = {:.3e}, phi = {:.3e})",
            params.psi, params.phi
        ));
    } else if params.b.abs() > 0.999_99 {
        converged = false;
        message = Some(format!("autoregressive coefficient at the boundary (b = {})", params.b));
    } else {
        let g = optim::gradient(&objective, &x);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Gradient in the unconstrained space, relative to the sample size.
        if gmax > 1e-3 * (n as f64).max(1.0).sqrt() {
            converged = false;
            message = Some(format!("gradient not small at the optimum (max |g| = {gmax:.3e})"));
        }
    }
    debug_assert!(k == x.len());
    finish(data, spec, params, loglik, converged, evaluations, message)
}

fn finish(
    data: &PreparedSeries,
    spec: ModelSpec,
    params: GasParams,
    loglik: f64,
    converged: bool,
    evaluations: usize,
    message: Option<String>,
) -> FittedModel {
    let std_errors = if loglik.is_finite() {
        standard_errors(data, spec, &params)
    } else {
        StdErrors::default()
    };
    FittedModel {
        spec,
        params,
        loglik,
        aic: aic_value(loglik, spec.free_params()),
        n_obs: data.len(),
        converged,
        std_errors,
        evaluations,
        message,
    }
}

/// Standard errors from the numerical Hessian of the log-likelihood in natural
/// parameters.
fn standard_errors(data: &PreparedSeries, spec: ModelSpec, params: &GasParams) -> StdErrors {
    let theta = spec.natural(params);
    let neg_loglik = |v: &[f64]| -> f64 {
        let p = spec.natural_params(v);
        if p.psi <= 0.0 || p.phi <= 0.0 || p.b.abs() >= 1.0 {
            return f64::NAN;
        }
        -data.loglik(&p)
    };
    let info: DMatrix<f64> = hessian(&neg_loglik, &theta);
    let mut se = StdErrors::default();
    if info.iter().any(|v| !v.is_finite()) {
        return se;
    }
    let Some(chol) = info.cholesky() else {
        return se;
    };
    let cov = chol.inverse();
    let mut idx = 0;
    let mut take = || {
        let v = cov[(idx, idx)];
        idx += 1;
        (v > 0.0).then(|| v.sqrt())
    };
    se.c = take();
    if spec.dynamics == Dynamics::Dynamic {
        se.b = take();
        se.a = take();
    }
    if spec.family.psi_free() {
        se.psi = take();
    }
    if spec.family.phi_free() {
        se.phi = take();
    }
    se
}

/// Fits of all eight variants on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_obs: usize,
    pub rows: Vec<FittedModel>,
    /// Index of the row with the lowest AIC among converged fits.
    pub best: Option<usize>,
}

/// Fits the eight variants, each seeded with the optima of the models it nests.
///
/// Fits run in four dependency waves; fits within a wave run in parallel.
pub fn model_table(series: &[f64]) -> Result<ComparisonReport> {
    use Dynamics::*;
    use Family::*;
    let data = validate_series(series)?;
    let run = |spec: ModelSpec, seeds: Vec<GasParams>| fit_prepared(&data, spec, &seeds);

    let s_exp = run(ModelSpec::new(Static, Exponential), vec![]);
    let wave: Vec<FittedModel> = [Weibull, Gamma]
        .par_iter()
        .map(|&f| run(ModelSpec::new(Static, f), vec![s_exp.params]))
        .collect();
    let (s_wei, s_gam) = (wave[0].clone(), wave[1].clone());

    let wave: Vec<FittedModel> = [
        (
            ModelSpec::new(Static, GeneralizedGamma),
            vec![s_wei.params, s_gam.params],
        ),
        (ModelSpec::new(Dynamic, Exponential), vec![s_exp.params]),
    ]
    .into_par_iter()
    .map(|(spec, seeds)| run(spec, seeds))
    .collect();
    let (s_gg, d_exp) = (wave[0].clone(), wave[1].clone());

    let wave: Vec<FittedModel> = [
        (ModelSpec::new(Dynamic, Weibull), vec![s_wei.params, d_exp.params]),
        (ModelSpec::new(Dynamic, Gamma), vec![s_gam.params, d_exp.params]),
    ]
    .into_par_iter()
    .map(|(spec, seeds)| run(spec, seeds))
    .collect();
    let (d_wei, d_gam) = (wave[0].clone(), wave[1].clone());

    let d_gg = run(
        ModelSpec::new(Dynamic, GeneralizedGamma),
        vec![s_gg.params, d_wei.params, d_gam.params],
    );

    let rows = vec![s_exp, s_wei, s_gam, s_gg, d_exp, d_wei, d_gam, d_gg];
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.converged)
        .min_by(|(_, x), (_, y)| x.aic.total_cmp(&y.aic))
        .map(|(i, _)| i);
    Ok(ComparisonReport {
        n_obs: data.len(),
        rows,
        best,
    })
}

/// CSV header of the comparison report.
pub const REPORT_COLUMNS: [&str; 12] = [
    "dynamics",
    "family",
    "c",
    "b",
    "a",
    "psi",
    "phi",
    "loglik",
    "aic",
    "k",
    "converged",
    "aic_best",
];

impl ComparisonReport {
    pub fn best_row(&self) -> Option<&FittedModel> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS)?;
        for (i, r) in self.rows.iter().enumerate() {
            let p = &r.params;
            w.write_record([
                r.spec.dynamics.label().to_string(),
                r.spec.family.label().to_string(),
                format!("{:.6}", p.c),
                format!("{:.6}", p.b),
                format!("{:.6}", p.a),
                format!("{:.6}", p.psi),
                format!("{:.6}", p.phi),
                format!("{:.4}", r.loglik),
                format!("{:.4}", r.aic),
                r.spec.free_params().to_string(),
                r.converged.to_string(),
                (self.best == Some(i)).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
