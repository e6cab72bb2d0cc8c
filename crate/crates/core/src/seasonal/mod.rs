//! Diurnal and weekly adjustment of raw inter-arrival times.
//!
//! The log raw duration is regressed on a cubic truncated power basis in the
//! week position `x` (minutes since Monday 00:00) plus a linear trend in elapsed
//! time `t`:
//!
//! ```text
//! ln ỹ_i = β_0 + β_1 x_i + β_2 x_i² + β_3 x_i³ + Σ_k β_{k+3} max(0, x_i − ξ_k)³ + γ t_i + ε_i
//! ```
//!
//! Weights are the raw durations. To keep the weekly curve continuous across the
//! Sunday/Monday boundary the sample is stacked three times with week positions
//! `x − 10080`, `x` and `x + 10080` (response, weight and trend unchanged) and
//! knots cover `[−10080, 20160)`. Adjusted durations are the exponentiated
//! residuals of the middle copy, scaled to unit mean.
//!
//! The truncated power basis is badly conditioned, so the least-squares problem
//! is solved in the uniform cubic B-spline basis spanning the same spline space
//! and the solution is converted to truncated power coefficients. The lowest
//! knot sits on the left end of the stacked range, where its truncated cube
//! equals a cubic polynomial; its coefficient is fixed at zero.

pub mod io;
pub mod synthetic;

use chrono::{Datelike, NaiveDateTime, Timelike};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const MINUTES_PER_WEEK: f64 = 10_080.0;
pub const DEFAULT_KNOT_SPACING: f64 = 90.0;
/// Replacement for zero inter-arrival times: half the one-minute resolution.
pub const ZERO_REPLACEMENT: f64 = 0.5;
/// Singular values below this fraction of the largest are treated as zero.
const RCOND: f64 = 1e-12;

/// Replaces zero durations by [`ZERO_REPLACEMENT`]; negative values are an error.
pub fn preprocess_zeros(raw: &[f64]) -> Result<Vec<f64>> {
    raw.iter()
        .enumerate()
        .map(|(i, &d)| {
            if d.is_nan() || d < 0.0 {
                domain(format!("duration {i} is negative ({d}); timestamps out of order"))
            } else if d == 0.0 {
                Ok(ZERO_REPLACEMENT)
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// Minutes elapsed since the Monday 00:00 that starts the week of `ts`.
pub fn week_position(ts: &NaiveDateTime) -> f64 {
    let day = ts.weekday().num_days_from_monday() as f64;
    day * 1440.0 + ts.hour() as f64 * 60.0 + ts.minute() as f64 + ts.second() as f64 / 60.0
}

/// Raw inter-arrival times with their calendar covariates.
///
/// Observation `i` is the gap between arrivals `i` and `i + 1`; its week
/// position and trend value are taken at arrival `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterArrivalSeries {
    /// Start of each interval.
    pub timestamps: Vec<NaiveDateTime>,
    /// Positive durations in minutes, zeros already replaced.
    pub durations: Vec<f64>,
    pub week_position: Vec<f64>,
    /// Elapsed minutes since the first arrival, `t_i = Σ_{j<i} ỹ_j`.
    pub trend: Vec<f64>,
    pub zero_replacements: usize,
}

impl InterArrivalSeries {
    /// Builds the series from nondecreasing arrival timestamps.
    pub fn from_timestamps(timestamps: &[NaiveDateTime]) -> Result<Self> {
        if timestamps.len() < 3 {
            return domain(format!(
                "need at least 3 timestamps (2 inter-arrival times), got {}",
                timestamps.len()
            ));
        }
        let raw: Vec<f64> = timestamps
            .windows(2)
            .map(|w| (w[1] - w[0]).num_seconds() as f64 / 60.0)
            .collect();
        if let Some(i) = raw.iter().position(|d| *d < 0.0) {
            return domain(format!(
                "timestamps not sorted: arrival {} ({}) precedes arrival {} ({})",
                i + 1,
                timestamps[i + 1],
                i,
                timestamps[i]
            ));
        }
        Self::assemble(timestamps[..timestamps.len() - 1].to_vec(), &raw)
    }

    /// Builds the series from precomputed durations starting at `start`.
    pub fn from_durations(start: NaiveDateTime, raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 {
            return domain(format!("need at least 2 durations, got {}", raw.len()));
        }
        let mut timestamps = Vec::with_capacity(raw.len());
        let mut elapsed = 0.0;
        for &d in raw {
            let secs = (elapsed * 60.0f64).round() as i64;
            timestamps.push(start + chrono::Duration::seconds(secs));
            elapsed += d.max(0.0);
        }
        Self::assemble(timestamps, raw)
    }

    fn assemble(timestamps: Vec<NaiveDateTime>, raw: &[f64]) -> Result<Self> {
        let zero_replacements = raw.iter().filter(|d| **d == 0.0).count();
        let durations = preprocess_zeros(raw)?;
        let week_position = timestamps.iter().map(week_position).collect();
        let mut trend = Vec::with_capacity(durations.len());
        let mut t = 0.0;
        for d in &durations {
            trend.push(t);
            t += d;
        }
        Ok(Self {
            timestamps,
            durations,
            week_position,
            trend,
            zero_replacements,
        })
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }
}

/// Knots at multiples of `spacing` minutes covering `[−10080, 20160)`.
pub fn knot_grid(spacing: f64) -> Result<Vec<f64>> {
    if !(spacing > 0.0) || (MINUTES_PER_WEEK / spacing).fract().abs() > 1e-9 {
        return domain(format!("knot spacing {spacing} must divide 10080 minutes"));
    }
    let per_week = (MINUTES_PER_WEEK / spacing).round() as usize;
    Ok((0..3 * per_week)
        .map(|k| -MINUTES_PER_WEEK + k as f64 * spacing)
        .collect())
}

/// Values of the spline basis (without trend) at week position `x`.
pub fn basis_row(x: f64, knots: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(&[1.0, x, x * x, x * x * x]);
    out.extend(knots.iter().map(|k| {
        let d = x - k;
        if d > 0.0 {
            d * d * d
        } else {
            0.0
        }
    }));
}

/// Number of uniform cubic B-splines on the stacked range.
pub fn bspline_count(knots: &[f64]) -> usize {
    knots.len() + 3
}

/// Values of the uniform cubic B-splines at `x`, written into `out`
/// (length [`bspline_count`]). Knots must be equally spaced by `spacing`.
pub fn bspline_row(x: f64, knots: &[f64], spacing: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let (m, w) = bspline_weights(x, knots, spacing);
    out[m..m + 4].copy_from_slice(&w);
}

/// Index of the first nonzero B-spline at `x` and the four nonzero values.
/// Outside the knot range the end pieces are extended.
fn bspline_weights(x: f64, knots: &[f64], spacing: f64) -> (usize, [f64; 4]) {
    let pos = (x - knots[0]) / spacing;
    let m = (pos.floor().max(0.0) as usize).min(knots.len() - 1);
    let u = pos - m as f64;
    let v = 1.0 - u;
    (
        m,
        [
            v * v * v / 6.0,
            (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0,
            (-3.0 * u * u * u + 3.0 * u * u + 3.0 * u + 1.0) / 6.0,
            u * u * u / 6.0,
        ],
    )
}

/// Converts uniform cubic B-spline coefficients to truncated power
/// coefficients `[β_0, β_1, β_2, β_3, β_ξ1, …, β_ξK]` with `β_ξ1 = 0`.
pub fn bspline_to_truncated_power(coef: &[f64], knots: &[f64], spacing: f64) -> Vec<f64> {
    let k = knots.len();
    let c = coef;
    // First piece as a cubic in u = (x − ξ_1) / h.
    let e = [
        (c[0] + 4.0 * c[1] + c[2]) / 6.0,
        (-3.0 * c[0] + 3.0 * c[2]) / 6.0,
        (3.0 * c[0] - 6.0 * c[1] + 3.0 * c[2]) / 6.0,
        (-c[0] + 3.0 * c[1] - 3.0 * c[2] + c[3]) / 6.0,
    ];
    // u = x / h + a
    let a = -knots[0] / spacing;
    let binom = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let mut out = vec![0.0; k + 4];
    for (p, slot) in out.iter_mut().take(4).enumerate() {
        let mut v = 0.0;
        for j in p..4 {
            v += e[j] * binom[j][p] * a.powi((j - p) as i32);
        }
        *slot = v / spacing.powi(p as i32);
    }
    let third = |m: usize| -c[m] + 3.0 * c[m + 1] - 3.0 * c[m + 2] + c[m + 3];
    let h3 = spacing.powi(3);
    for m in 1..k {
        out[4 + m] = (third(m) - third(m - 1)) / (6.0 * h3);
    }
    out
}

/// Stacked regression design.
#[derive(Debug, Clone)]
pub struct Design {
    /// `3n × (K + 5)` matrix; copy `j` occupies rows `j n .. (j + 1) n` with week
    /// positions shifted by `(j − 1) · 10080`. The last column is the trend.
    pub matrix: DMatrix<f64>,
    pub knots: Vec<f64>,
    pub n_obs: usize,
}

impl Design {
    pub fn n_columns(&self) -> usize {
        self.matrix.ncols()
    }

    /// Repeats a per-observation vector once per stacked copy.
    pub fn stack(&self, values: &[f64]) -> DVector<f64> {
        DVector::from_iterator(3 * values.len(), (0..3).flat_map(|_| values.iter().copied()))
    }
}

pub fn build_design(series: &InterArrivalSeries, knot_spacing: f64) -> Result<Design> {
    if series.is_empty() {
        return domain("empty series");
    }
    let knots = knot_grid(knot_spacing)?;
    let n = series.len();
    let ncols = knots.len() + 5;
    let mut matrix = DMatrix::zeros(3 * n, ncols);
    let mut row = Vec::with_capacity(ncols);
    for copy in 0..3 {
        let shift = (copy as f64 - 1.0) * MINUTES_PER_WEEK;
        for i in 0..n {
            basis_row(series.week_position[i] + shift, &knots, &mut row);
            row.push(series.trend[i]);
            let r = copy * n + i;
            for (j, v) in row.iter().enumerate() {
                matrix[(r, j)] = *v;
            }
        }
    }
    Ok(Design {
        matrix,
        knots,
        n_obs: n,
    })
}

/// Quality measures of a spline fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Columns of the truncated power design.
    pub columns: usize,
    /// Numerical rank of the B-spline system; `columns − 1` when every
    /// coefficient is identified.
    pub rank: usize,
    pub rank_deficient: bool,
    pub weighted_r2: f64,
    /// Largest |cos| between the weighted residual vector and a design column;
    /// zero at an exact least-squares solution.
    pub max_residual_cosine: f64,
}

/// Fitted weekly spline, trend and standardization constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFit {
    pub knots: Vec<f64>,
    /// Coefficients of `1, x, x², x³` and the truncated cubes, in minutes.
    pub beta: Vec<f64>,
    /// The same curve as coefficients of the uniform cubic B-splines on
    /// `knots`, used for evaluation.
    pub bspline: Vec<f64>,
    pub gamma: f64,
    /// Mean of the exponentiated middle-copy residuals.
    pub standardization: f64,
    pub diagnostics: FitDiagnostics,
}

impl SplineFit {
    /// Weekly curve `s(x)` without the trend.
    pub fn weekly(&self, x: f64) -> f64 {
        let (m, w) = bspline_weights(x, &self.knots, self.knots[1] - self.knots[0]);
        w.iter().zip(&self.bspline[m..m + 4]).map(|(w, c)| w * c).sum()
    }

    /// Fitted log duration at week position `x` and elapsed time `t`.
    pub fn fitted_log(&self, x: f64, t: f64) -> f64 {
        self.weekly(x) + self.gamma * t
    }

    fn raw_residual_ratios(&self, series: &InterArrivalSeries) -> Vec<f64> {
        (0..series.len())
            .map(|i| {
                let f = self.fitted_log(series.week_position[i], series.trend[i]);
                (series.durations[i].ln() - f).exp()
            })
            .collect()
    }
}

/// Weighted least squares with column equilibration, Householder QR and a
/// minimum-norm SVD solve of the triangular factor.
///
/// Returns the coefficients on the original column scale and the numerical rank.
pub fn weighted_lstsq(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<(DVector<f64>, usize)> {
    let (m, p) = design.shape();
    if m == 0 || p == 0 {
        return domain("empty design");
    }
    if response.len() != m || weights.len() != m {
        return domain(format!(
            "row mismatch: design {m}, response {}, weights {}",
            response.len(),
            weights.len()
        ));
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return domain(format!("weight {i} is not positive"));
    }
    let sw = weights.map(f64::sqrt);
    let mut a = design.clone();
    for (mut row, s) in a.row_iter_mut().zip(sw.iter()) {
        row *= *s;
    }
    let mut rhs = response.component_mul(&sw);
    let scale: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    for (mut col, s) in a.column_iter_mut().zip(&scale) {
        if *s > 0.0 {
            col /= *s;
        }
    }
    let qr = a.qr();
    let r = qr.r();
    qr.q_tr_mul(&mut rhs);
    let k = r.nrows();
    let qtb = rhs.rows(0, k).into_owned();
    let svd = r.svd(true, true);
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Simulation("SVD failed to produce singular vectors".into())),
    };
    let smax = svd.singular_values.max();
    let utb = u.transpose() * qtb;
    let mut z = DVector::zeros(svd.singular_values.len());
    let mut rank = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > smax * RCOND {
            z[i] = utb[i] / s;
            rank += 1;
        }
    }
    let mut coef = vt.transpose() * z;
    for (c, s) in coef.iter_mut().zip(&scale) {
        *c = if *s > 0.0 { *c / s } else { 0.0 };
    }
    Ok((coef, rank))
}

/// Fits the stacked spline regression.
///
/// `log_durations` and `weights` are per observation (length `n`); they are
/// repeated for each stacked copy.
pub fn wls_fit(design: &Design, log_durations: &[f64], weights: &[f64]) -> Result<SplineFit> {
    let n = design.n_obs;
    if log_durations.len() != n || weights.len() != n {
        return domain(format!(
            "expected {n} responses and weights, got {} and {}",
            log_durations.len(),
            weights.len()
        ));
    }
    let y = design.stack(log_durations);
    let w = design.stack(weights);
    let p = design.n_columns();
    let knots = &design.knots;
    let spacing = if knots.len() > 1 {
        knots[1] - knots[0]
    } else {
        MINUTES_PER_WEEK
    };
    let nb = bspline_count(knots);
    let mut spline = DMatrix::zeros(3 * n, nb + 1);
    let mut row = vec![0.0; nb];
    for r in 0..3 * n {
        bspline_row(design.matrix[(r, 1)], knots, spacing, &mut row);
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                spline[(r, j)] = *v;
            }
        }
        spline[(r, nb)] = design.matrix[(r, p - 1)];
    }
    let (spline_coef, rank) = weighted_lstsq(&spline, &y, &w)?;
    let mut coef = DVector::from_vec(bspline_to_truncated_power(
        &spline_coef.as_slice()[..nb],
        knots,
        spacing,
    ));
    coef = coef.push(spline_coef[nb]);

    let fitted = &spline * &spline_coef;
    let resid = &y - &fitted;
    let wsum: f64 = w.sum();
    let ybar = w.dot(&y) / wsum;
    let sse: f64 = resid.iter().zip(w.iter()).map(|(r, w)| w * r * r).sum();
    let sst: f64 = y.iter().zip(w.iter()).map(|(v, w)| w * (v - ybar).powi(2)).sum();
    let weighted_resid = resid.component_mul(&w.map(f64::sqrt));
    let rnorm = weighted_resid.norm();
    let max_cos = design
        .matrix
        .column_iter()
        .map(|col| {
            let wc = col.component_mul(&w.map(f64::sqrt));
            let cn = wc.norm();
            if cn == 0.0 || rnorm == 0.0 {
                0.0
            } else {
                (wc.dot(&weighted_resid) / (cn * rnorm)).abs()
            }
        })
        .fold(0.0, f64::max);

    let mut fit = SplineFit {
        knots: design.knots.clone(),
        beta: coef.as_slice()[..p - 1].to_vec(),
        bspline: spline_coef.as_slice()[..nb].to_vec(),
        gamma: coef[p - 1],
        standardization: 1.0,
        diagnostics: FitDiagnostics {
            columns: p,
            rank,
            rank_deficient: rank < nb + 1,
            weighted_r2: if sst > 0.0 { 1.0 - sse / sst } else { 1.0 },
            max_residual_cosine: max_cos,
        },
    };
    // Middle-copy rows evaluated through the same path `adjust` uses.
    let middle = n..2 * n;
    let ratios: Vec<f64> = middle
        .map(|r| {
            let x = design.matrix[(r, 1)];
            let t = design.matrix[(r, p - 1)];
            (y[r] - fit.fitted_log(x, t)).exp()
        })
        .collect();
    fit.standardization = ratios.iter().sum::<f64>() / n as f64;
    Ok(fit)
}

/// Exponentiated residuals divided by the fit's standardization constant.
///
/// On the series the spline was fitted to, the result has unit mean.
pub fn adjust(series: &InterArrivalSeries, fit: &SplineFit) -> Vec<f64> {
    fit.raw_residual_ratios(series)
        .iter()
        .map(|r| r / fit.standardization)
        .collect()
}

/// Result of the full adjustment pipeline.
#[derive(Debug, Clone)]
pub struct Adjustment {
    pub fit: SplineFit,
    pub adjusted: Vec<f64>,
    pub fitted_log: Vec<f64>,
}

/// Design, WLS fit with raw durations as weights, and adjustment in one call.
pub fn adjust_series(series: &InterArrivalSeries, knot_spacing: f64) -> Result<Adjustment> {
    let design = build_design(series, knot_spacing)?;
    let logs: Vec<f64> = series.durations.iter().map(|d| d.ln()).collect();
    let fit = wls_fit(&design, &logs, &series.durations)?;
    let adjusted = adjust(series, &fit);
    let fitted_log = (0..series.len())
        .map(|i| fit.fitted_log(series.week_position[i], series.trend[i]))
        .collect();
    Ok(Adjustment {
        fit,
        adjusted,
        fitted_log,
    })
}
