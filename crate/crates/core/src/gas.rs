//! Score-driven (GAS) dynamics for the log-scale of generalized gamma durations.
//!
//! The log-scale follows
//!
//! ```text
//! α_{i+1} = c + b α_i + a φ (y_i^φ e^(−φ α_i) − ψ)
//! ```
//!
//! Indexing convention: the recursion starts from the long-run mean
//! `α_0 = c / (1 − b)` attached to an unobserved observation `y_0`. Stepping once
//! with the expected (zero) score of that observation leaves the log-scale at
//! `c / (1 − b)`, so the first *observed* duration is evaluated at the long-run
//! mean and every observed duration contributes to the log-likelihood. Only the
//! unobserved `y_0` term is set aside.

use serde::{Deserialize, Serialize};

use crate::distributions::{log_norm_const, log_pdf_with_const, sample_raw, Family, GenGammaParams, EXPONENT_GUARD};
use crate::error::{domain, Result};
use crate::rng::RandomStream;

/// The log-scale is clamped to `[-ALPHA_BOUND, ALPHA_BOUND]` after every step.
pub const ALPHA_BOUND: f64 = 50.0;

/// Parameters θ = (c, b, a, ψ, φ) of the GAS duration model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub c: f64,
    pub b: f64,
    pub a: f64,
    pub psi: f64,
    pub phi: f64,
}

impl GasParams {
    pub fn new(c: f64, b: f64, a: f64, psi: f64, phi: f64) -> Result<Self> {
        let p = Self { c, b, a, psi, phi };
        p.validate()?;
        Ok(p)
    }

    /// i.i.d. durations with constant log-scale `c`.
    pub fn static_model(c: f64, psi: f64, phi: f64) -> Result<Self> {
        Self::new(c, 0.0, 0.0, psi, phi)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c, self.b, self.a, self.psi, self.phi];
        if all.iter().any(|v| !v.is_finite()) {
            return domain(format!("non-finite GAS parameters {self:?}"));
        }
        if self.psi <= 0.0 || self.phi <= 0.0 {
            return domain(format!("shape parameters must be positive, got {self:?}"));
        }
        if self.b.abs() >= 1.0 {
            return domain(format!(
                "|b| must be below 1 for a finite long-run mean, got b = {}",
                self.b
            ));
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    pub fn family(&self) -> Family {
        Family::classify(self.psi, self.phi)
    }

    pub fn distribution_at(&self, alpha: f64) -> GenGammaParams {
        GenGammaParams {
            alpha,
            psi: self.psi,
            phi: self.phi,
        }
    }

    /// Shifts the intercept so durations are scaled by `factor`.
    ///
    /// Multiplying every duration by `s` maps α to α + ln s, which leaves the
    /// score unchanged and turns the recursion intercept into `c + (1 − b) ln s`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            c: self.c + (1.0 - self.b) * factor.ln(),
            ..*self
        }
    }
}

/// Result of running the filter over an observed series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    /// Log-scale in force for each observation.
    pub alphas: Vec<f64>,
    pub per_obs_loglik: Vec<f64>,
    pub total_loglik: f64,
}

/// Long-run mean of the log-scale, `c / (1 − b)`.
pub fn init_alpha(p: &GasParams) -> Result<f64> {
    if !(p.b.abs() < 1.0) {
        return domain(format!("init_alpha requires |b| < 1, got b = {}", p.b));
    }
    Ok(p.c / (1.0 - p.b))
}

/// One step of the recursion, clamped to [−50, 50].
pub fn gas_step(alpha: f64, y: f64, p: &GasParams) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("duration must be positive and finite, got {y}"));
    }
    Ok(step_ln(alpha, y.ln(), p))
}

#[inline]
fn step_ln(alpha: f64, ln_y: f64, p: &GasParams) -> f64 {
    let e = (p.phi * (ln_y - alpha)).min(EXPONENT_GUARD);
    let score = p.phi * (e.exp() - p.psi);
    clamp_alpha(p.c + p.b * alpha + p.a * score)
}

#[inline]
fn clamp_alpha(alpha: f64) -> f64 {
    // NaN propagates so the likelihood can reject it.
    alpha.clamp(-ALPHA_BOUND, ALPHA_BOUND)
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.is_empty() {
        return domain("empty duration series");
    }
    if let Some((i, y)) = series.iter().enumerate().find(|(_, y)| !(**y > 0.0 && y.is_finite())) {
        return domain(format!("duration {i} is not positive and finite: {y}"));
    }
    Ok(())
}

/// Runs the recursion over `series`, returning the log-scale path and the
/// log-likelihood contributions.
pub fn gas_filter(series: &[f64], p: &GasParams) -> Result<FilterOutput> {
    p.validate()?;
    check_series(series)?;
    let norm = log_norm_const(p.psi, p.phi);
    let mut alpha = init_alpha(p)?;
    let mut alphas = Vec::with_capacity(series.len());
    let mut per_obs = Vec::with_capacity(series.len());
    for &y in series {
        alphas.push(alpha);
        per_obs.push(log_pdf_with_const(y, alpha, p.psi, p.phi, norm));
        alpha = step_ln(alpha, y.ln(), p);
    }
    let total_loglik = per_obs.iter().sum();
    Ok(FilterOutput {
        alphas,
        per_obs_loglik: per_obs,
        total_loglik,
    })
}

/// A duration series with logarithms cached, for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct PreparedSeries {
    ln_y: Vec<f64>,
}

impl PreparedSeries {
    pub fn new(series: &[f64]) -> Result<Self> {
        check_series(series)?;
        Ok(Self {
            ln_y: series.iter().map(|y| y.ln()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ln_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_y.is_empty()
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_y
    }

    /// Total log-likelihood under `p`; −∞ when any term overflows or is NaN.
    ///
    /// Parameters are not validated.
    pub fn loglik(&self, p: &GasParams) -> f64 {
        let norm = log_norm_const(p.psi, p.phi);
        let shape = p.psi * p.phi - 1.0;
        let mut alpha = p.c / (1.0 - p.b);
        let mut total = 0.0;
        for &ln_y in &self.ln_y {
            let z = ln_y - alpha;
            let e = p.phi * z;
            if !(e <= EXPONENT_GUARD) {
                return f64::NEG_INFINITY;
            }
            let pw = e.exp();
            total += norm - alpha + shape * z - pw;
            alpha = clamp_alpha(p.c + p.b * alpha + p.a * p.phi * (pw - p.psi));
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }
}

/// Streaming generator of GAS durations.
#[derive(Debug, Clone)]
pub struct GasProcess {
    params: GasParams,
    alpha: f64,
}

impl GasProcess {
    pub fn new(params: GasParams) -> Result<Self> {
        params.validate()?;
        let alpha = init_alpha(&params)?;
        Ok(Self { params, alpha })
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    /// Log-scale that the next draw will use.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn next_duration(&mut self, rng: &mut RandomStream) -> f64 {
        let p = &self.params;
        let y = sample_raw(self.alpha, p.psi, p.phi, rng);
        if p.a != 0.0 || p.b != 0.0 {
            self.alpha = step_ln(self.alpha, y.ln(), p);
        }
        y
    }
}

/// Simulates `n` durations from the model.
pub fn gas_simulate(p: &GasParams, n: usize, rng: &mut RandomStream) -> Result<Vec<f64>> {
    Ok(gas_simulate_with_alphas(p, n, rng)?.0)
}

/// Simulates `n` durations and returns them with the log-scale path that
/// generated them.
pub fn gas_simulate_with_alphas(p: &GasParams, n: usize, rng: &mut RandomStream) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return domain("cannot simulate an empty series");
    }
    let mut process = GasProcess::new(*p)?;
    let mut ys = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for _ in 0..n {
        alphas.push(process.alpha());
        ys.push(process.next_duration(rng));
    }
    Ok((ys, alphas))
}

/// Shifts the intercept so the long-run mean duration is one.
///
/// Static models use the closed-form mean. Dynamic models estimate the
/// stationary mean from a pilot path of `pilot_len` draws; by the scaling
/// property of the recursion a single correction is exact up to the pilot's
/// Monte Carlo error. Returns the calibrated parameters and the mean duration
/// of the original parameters.
///
/// The score depends on a draw only through its standardized value, which is
/// independent of the current log-scale, so the pilot averages the conditional
/// mean `E[y | α] = e^α E[ε]` rather than the draws themselves.
pub fn calibrate_unit_mean(p: &GasParams, pilot_len: usize, rng: &mut RandomStream) -> Result<(GasParams, f64)> {
    p.validate()?;
    let mean = if p.is_static() {
        p.distribution_at(p.c).mean()
    } else {
        if pilot_len == 0 {
            return domain("pilot length must be positive for a dynamic model");
        }
        let mut process = GasProcess::new(*p)?;
        let centre = process.alpha();
        let mut sum = 0.0;
        for _ in 0..pilot_len {
            sum += (process.alpha() - centre).exp();
            process.next_duration(rng);
        }
        p.distribution_at(centre).mean() * sum / pilot_len as f64
    };
    Ok((p.rescaled(1.0 / mean), mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::log_pdf;

    fn dyn_exp() -> GasParams {
        GasParams::new(0.0, 0.76, 0.06, 1.0, 1.0).unwrap()
    }

    #[test]
    fn init_alpha_values() {
        assert_eq!(init_alpha(&dyn_exp()).unwrap(), 0.0);
        let gg = GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).unwrap();
        assert!((init_alpha(&gg).unwrap() - (-0.214_285_714_285_714_3)).abs() < 1e-15);
        let p = GasParams::static_model(0.5, 1.0, 1.0).unwrap();
        assert_eq!(init_alpha(&p).unwrap(), 0.5);
        let unit_root = GasParams {
            c: 0.1,
            b: 1.0,
            a: 0.0,
            psi: 1.0,
            phi: 1.0,
        };
        assert!(init_alpha(&unit_root).is_err());
        assert!(unit_root.validate().is_err());
    }

    #[test]
    fn step_values() {
        assert!((gas_step(0.0, 2.0, &dyn_exp()).unwrap() - 0.06).abs() < 1e-15);
        assert_eq!(gas_step(0.0, 1.0, &dyn_exp()).unwrap(), 0.0);
        let flat = GasParams::static_model(0.3, 1.0, 1.0).unwrap();
        for &(al, y) in &[(4.0, 0.1), (-2.0, 9.0), (0.0, 1.0)] {
            assert_eq!(gas_step(al, y, &flat).unwrap(), 0.3);
        }
        assert!(gas_step(0.0, 0.0, &dyn_exp()).is_err());
    }

    #[test]
    fn step_is_clamped() {
        let wild = GasParams::new(0.0, 0.5, 5.0, 1.0, 1.0).unwrap();
        assert_eq!(gas_step(-40.0, 1e3, &wild).unwrap(), ALPHA_BOUND);
        assert_eq!(
            gas_step(0.0, 1e-300, &GasParams::new(-49.0, 0.9, 5.0, 1.0, 1.0).unwrap()).unwrap(),
            -ALPHA_BOUND
        );
    }

    #[test]
    fn constant_unit_series_static_exponential() {
        let p = GasParams::static_model(0.0, 1.0, 1.0).unwrap();
        let out = gas_filter(&vec![1.0; 37], &p).unwrap();
        assert!((out.total_loglik + 37.0).abs() < 1e-12);
        assert_eq!(out.alphas.len(), 37);
        assert_eq!(out.per_obs_loglik.len(), 37);
    }

    #[test]
    fn filter_matches_manual_recursion() {
        let p = GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).unwrap();
        let series = [0.3, 1.7, 0.02, 4.5, 1.0, 0.8, 2.2];
        let out = gas_filter(&series, &p).unwrap();
        let mut alpha = p.c / (1.0 - p.b);
        let mut total = 0.0;
        for (i, &y) in series.iter().enumerate() {
            assert_eq!(out.alphas[i], alpha);
            let term = log_pdf(y, &p.distribution_at(alpha)).unwrap();
            assert!((out.per_obs_loglik[i] - term).abs() < 1e-14);
            total += term;
            alpha = gas_step(alpha, y, &p).unwrap();
        }
        assert!((out.total_loglik - total).abs() < 1e-12);
        let prepared = PreparedSeries::new(&series).unwrap();
        assert!((prepared.loglik(&p) - total).abs() < 1e-12);
    }

    #[test]
    fn filter_rejects_bad_input() {
        let p = dyn_exp();
        assert!(gas_filter(&[], &p).is_err());
        assert!(gas_filter(&[1.0, 0.0], &p).is_err());
        assert!(gas_filter(&[1.0, -2.0], &p).is_err());
    }

    #[test]
    fn simulate_then_filter_reproduces_alpha_path() {
        let p = GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).unwrap();
        let mut rng = RandomStream::new(5);
        let (ys, alphas) = gas_simulate_with_alphas(&p, 5000, &mut rng).unwrap();
        let out = gas_filter(&ys, &p).unwrap();
        assert_eq!(out.alphas, alphas);
    }

    #[test]
    fn rescaling_multiplies_durations() {
        let p = GasParams::new(-0.06, 0.72, 0.07, 1.15, 0.90).unwrap();
        let q = p.rescaled(2.0);
        let mut r1 = RandomStream::new(9);
        let mut r2 = RandomStream::new(9);
        let a = gas_simulate(&p, 200, &mut r1).unwrap();
        let b = gas_simulate(&q, 200, &mut r2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-9 * y.max(1.0));
        }
    }

    #[test]
    fn static_calibration_is_exact() {
        let p = GasParams::static_model(-0.12, 1.08, 0.93).unwrap();
        let (q, m) = calibrate_unit_mean(&p, 0, &mut RandomStream::new(1)).unwrap();
        assert!((m - p.distribution_at(p.c).mean()).abs() < 1e-15);
        assert!((q.distribution_at(q.c).mean() - 1.0).abs() < 1e-12);
    }
}
