//! The generalized gamma distribution in the log-scale parametrization
//!
//! ```text
//! f(y | α, ψ, φ) = φ / (Γ(ψ) e^α) · (y / e^α)^(ψφ − 1) · exp(−(y / e^α)^φ),   y > 0
//! ```
//!
//! together with its exponential (ψ = φ = 1), Weibull (ψ = 1) and gamma (φ = 1)
//! special cases. Only the log-scale α carries a score and Fisher information,
//! since it is the only parameter that varies over time in the duration model.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::rng::RandomStream;

/// Beyond this value of `φ (ln y − α)` the term `(y e^−α)^φ` would overflow and
/// the log-density is reported as −∞.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Distribution family, i.e. which shape parameters are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Weibull,
    Gamma,
    GeneralizedGamma,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Exponential,
        Family::Weibull,
        Family::Gamma,
        Family::GeneralizedGamma,
    ];

    pub fn psi_free(self) -> bool {
        matches!(self, Family::Gamma | Family::GeneralizedGamma)
    }

    pub fn phi_free(self) -> bool {
        matches!(self, Family::Weibull | Family::GeneralizedGamma)
    }

    /// Number of free shape parameters (0, 1 or 2).
    pub fn shape_count(self) -> usize {
        self.psi_free() as usize + self.phi_free() as usize
    }

    /// Smallest family containing a distribution with these shapes.
    pub fn classify(psi: f64, phi: f64) -> Family {
        match (psi == 1.0, phi == 1.0) {
            (true, true) => Family::Exponential,
            (true, false) => Family::Weibull,
            (false, true) => Family::Gamma,
            (false, false) => Family::GeneralizedGamma,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::Gamma => "gamma",
            Family::GeneralizedGamma => "generalized_gamma",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "exp" | "exponential" => Ok(Family::Exponential),
            "weibull" => Ok(Family::Weibull),
            "gamma" => Ok(Family::Gamma),
            "gg" | "generalizedgamma" | "gengamma" => Ok(Family::GeneralizedGamma),
            _ => domain(format!("unknown distribution family '{s}'")),
        }
    }
}

/// Parameters of the generalized gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenGammaParams {
    /// Log-scale; the scale is `e^alpha` minutes.
    pub alpha: f64,
    pub psi: f64,
    pub phi: f64,
}

impl GenGammaParams {
    pub fn new(alpha: f64, psi: f64, phi: f64) -> Result<Self> {
        let p = Self { alpha, psi, phi };
        p.validate()?;
        Ok(p)
    }

    /// Unit exponential.
    pub fn exponential() -> Self {
        Self {
            alpha: 0.0,
            psi: 1.0,
            phi: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.psi.is_finite() && self.phi.is_finite()) {
            return domain(format!("non-finite generalized gamma parameters {self:?}"));
        }
        if self.psi <= 0.0 || self.phi <= 0.0 {
            return domain(format!("shape parameters must be positive, got {self:?}"));
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        Family::classify(self.psi, self.phi)
    }

    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        log_pdf(y, self)
    }

    pub fn mean(&self) -> f64 {
        mean(self)
    }

    pub fn variance(&self) -> f64 {
        variance(self)
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        sample(self, rng)
    }
}

fn check_obs(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("observation must be positive and finite, got {y}"));
    }
    Ok(())
}

/// Log-density with the shape-only normalizing constant `ln φ − ln Γ(ψ)` already
/// computed. Shared with the filter so the constant is evaluated once per pass.
#[inline]
pub(crate) fn log_pdf_with_const(y: f64, alpha: f64, psi: f64, phi: f64, norm: f64) -> f64 {
    let z = y.ln() - alpha;
    let e = phi * z;
    if e > EXPONENT_GUARD {
        return f64::NEG_INFINITY;
    }
    norm - alpha + (psi * phi - 1.0) * z - e.exp()
}

#[inline]
pub(crate) fn log_norm_const(psi: f64, phi: f64) -> f64 {
    phi.ln() - ln_gamma(psi)
}

/// Log of the generalized gamma density at `y`.
pub fn log_pdf(y: f64, p: &GenGammaParams) -> Result<f64> {
    p.validate()?;
    check_obs(y)?;
    Ok(log_pdf_with_const(
        y,
        p.alpha,
        p.psi,
        p.phi,
        log_norm_const(p.psi, p.phi),
    ))
}

/// `E[Y] = e^α Γ(ψ + 1/φ) / Γ(ψ)`.
pub fn mean(p: &GenGammaParams) -> f64 {
    (p.alpha + ln_gamma(p.psi + 1.0 / p.phi) - ln_gamma(p.psi)).exp()
}

pub fn variance(p: &GenGammaParams) -> f64 {
    let lg = ln_gamma(p.psi);
    let m1 = (ln_gamma(p.psi + 1.0 / p.phi) - lg).exp();
    let m2 = (ln_gamma(p.psi + 2.0 / p.phi) - lg).exp();
    (2.0 * p.alpha).exp() * (m2 - m1 * m1)
}

/// Score with respect to α: `φ (y^φ e^(−φα) − ψ)`.
pub fn score_alpha(y: f64, p: &GenGammaParams) -> Result<f64> {
    check_obs(y)?;
    Ok(score_alpha_unchecked(y, p.alpha, p.psi, p.phi))
}

#[inline]
pub(crate) fn score_alpha_unchecked(y: f64, alpha: f64, psi: f64, phi: f64) -> f64 {
    phi * ((phi * (y.ln() - alpha)).exp() - psi)
}

/// Fisher information for α, `ψ φ²`; free of α.
pub fn fisher_alpha(p: &GenGammaParams) -> f64 {
    p.psi * p.phi * p.phi
}

/// Draws `e^α G^(1/φ)` with `G ~ Gamma(ψ, 1)`.
#[inline]
pub fn sample(p: &GenGammaParams, rng: &mut RandomStream) -> f64 {
    sample_raw(p.alpha, p.psi, p.phi, rng)
}

#[inline]
pub(crate) fn sample_raw(alpha: f64, psi: f64, phi: f64, rng: &mut RandomStream) -> f64 {
    let g = rng.gamma(psi);
    if phi == 1.0 {
        alpha.exp() * g
    } else {
        alpha.exp() * g.powf(1.0 / phi)
    }
}
