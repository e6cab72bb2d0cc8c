//! Closed-form results for Markovian queues.
//!
//! The M/M/c "full busy period" is a maximal interval with all `c` servers
//! busy. During it the system drains at rate `cμ`, so it is distributed as an
//! M/M/1 busy period with service rate `cμ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Mean, standard deviation and 95% quantile of one measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMeasure {
    pub mean: f64,
    pub sd: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSummary {
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub servers: usize,
    /// Utilization `λ / (cμ)`.
    pub rho: f64,
    /// Probability that an arrival has to wait (Erlang-C).
    pub delay_probability: f64,
    pub number_in_system: AnalyticMeasure,
    pub response_time: AnalyticMeasure,
    pub busy_period: AnalyticMeasure,
    pub mean_waiting_time: f64,
    pub mean_queue_length: f64,
}

impl AnalyticSummary {
    /// `P(N_q > k)` for the number waiting.
    pub fn prob_queue_exceeds(&self, k: u32) -> f64 {
        self.delay_probability * self.rho.powi(k as i32 + 1)
    }

    /// `P(N_q >= k)` for the number waiting.
    pub fn prob_queue_at_least(&self, k: u32) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.prob_queue_exceeds(k - 1)
        }
    }

    /// Stationary probabilities of the number in system for `0..=max_level`.
    pub fn number_pmf(&self, max_level: usize) -> Vec<f64> {
        mmc_pmf(self.arrival_rate, self.service_rate, self.servers, max_level)
    }
}

fn check_rates(lambda: f64, mu: f64, servers: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("rates must be positive and finite, got λ = {lambda}, μ = {mu}"));
    }
    if servers == 0 {
        return domain("at least one server is required");
    }
    let rho = lambda / (servers as f64 * mu);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(rho)
}

/// Erlang-C delay probability with offered load `λ/μ` on `c` servers.
pub fn erlang_c(lambda: f64, mu: f64, servers: usize) -> Result<f64> {
    let rho = check_rates(lambda, mu, servers)?;
    let load = lambda / mu;
    // Erlang-B by the stable recursion, then convert.
    let mut b = 1.0;
    for k in 1..=servers {
        b = load * b / (k as f64 + load * b);
    }
    Ok(b / (1.0 - rho * (1.0 - b)))
}

fn mmc_pmf(lambda: f64, mu: f64, servers: usize, max_level: usize) -> Vec<f64> {
    let load = lambda / mu;
    let rho = load / servers as f64;
    let mut weights = Vec::with_capacity(max_level + 1);
    let mut w = 1.0;
    for n in 0..=max_level {
        if n > 0 {
            w *= if n <= servers { load / n as f64 } else { rho };
        }
        weights.push(w);
    }
    // Normalizer: finite head plus geometric tail beyond c.
    let mut head = 0.0;
    let mut wc = 1.0;
    for n in 0..servers {
        head += wc;
        wc *= load / (n + 1) as f64;
    }
    let total = head + wc / (1.0 - rho);
    weights.iter().map(|w| w / total).collect()
}

fn geometric_q95(rho: f64) -> f64 {
    // Smallest k with 1 − ρ^(k+1) ≥ 0.95.
    let k = ((0.05f64).ln() / rho.ln() - 1.0).ceil().max(0.0);
    let below = k - 1.0;
    if below >= 0.0 && 1.0 - rho.powf(below + 1.0) >= 0.95 {
        below
    } else {
        k
    }
}

/// `e^(−x) I₁(x)` for `x ≥ 0`.
pub fn bessel_i1_scaled(x: f64) -> f64 {
    if x <= 20.0 {
        let h = x / 2.0;
        let mut term = h;
        let mut sum = h;
        for k in 1..200 {
            term *= h * h / (k as f64 * (k + 1) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic series for ν = 1.
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let m = (2 * k - 1) as f64;
            term *= -(4.0 - m * m) / (k as f64 * 8.0 * x);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Density of the M/M/1 busy period.
pub fn busy_period_density(t: f64, lambda: f64, mu: f64) -> f64 {
    if t <= 0.0 {
        return if t == 0.0 { mu } else { 0.0 };
    }
    let x = 2.0 * t * (lambda * mu).sqrt();
    let rho = lambda / mu;
    let decay = (mu.sqrt() - lambda.sqrt()).powi(2);
    (-decay * t).exp() * bessel_i1_scaled(x) / (t * rho.sqrt())
}

/// Quantile of the M/M/1 busy period by Simpson integration of the density.
pub fn busy_period_quantile(p: f64, lambda: f64, mu: f64) -> f64 {
    let h = 0.0025 / mu;
    let mut acc = 0.0;
    let mut t = 0.0;
    let mut f0 = busy_period_density(0.0, lambda, mu);
    loop {
        let fm = busy_period_density(t + h / 2.0, lambda, mu);
        let f1 = busy_period_density(t + h, lambda, mu);
        let step = h / 6.0 * (f0 + 4.0 * fm + f1);
        if acc + step >= p {
            return t + h * (p - acc) / step;
        }
        acc += step;
        t += h;
        f0 = f1;
        if t > 1e7 / mu {
            return f64::INFINITY;
        }
    }
}

fn busy_period_measure(lambda: f64, mu: f64) -> AnalyticMeasure {
    let rho = lambda / mu;
    AnalyticMeasure {
        mean: 1.0 / (mu - lambda),
        sd: ((1.0 + rho) / (mu * mu * (1.0 - rho).powi(3))).sqrt(),
        q95: busy_period_quantile(0.95, lambda, mu),
    }
}

/// Stationary M/M/1 results.
pub fn mm1_analytic(lambda: f64, mu: f64) -> Result<AnalyticSummary> {
    let rho = check_rates(lambda, mu, 1)?;
    let gap = mu - lambda;
    Ok(AnalyticSummary {
        arrival_rate: lambda,
        service_rate: mu,
        servers: 1,
        rho,
        delay_probability: rho,
        number_in_system: AnalyticMeasure {
            mean: rho / (1.0 - rho),
            sd: rho.sqrt() / (1.0 - rho),
            q95: geometric_q95(rho),
        },
        response_time: AnalyticMeasure {
            mean: 1.0 / gap,
            sd: 1.0 / gap,
            q95: -(0.05f64).ln() / gap,
        },
        busy_period: busy_period_measure(lambda, mu),
        mean_waiting_time: rho / gap,
        mean_queue_length: rho * rho / (1.0 - rho),
    })
}

/// Stationary M/M/c results.
pub fn mmc_analytic(lambda: f64, mu: f64, servers: usize) -> Result<AnalyticSummary> {
    let rho = check_rates(lambda, mu, servers)?;
    let c = servers as f64;
    let delay = erlang_c(lambda, mu, servers)?;
    let theta = c * mu - lambda;
    let wq = delay / theta;
    let lq = lambda * wq;

    // N: head pmf up to c plus geometric tail; moments from the pmf far enough out.
    let tail_len = ((1e-16f64).ln() / rho.ln()).ceil() as usize;
    let pmf = mmc_pmf(lambda, mu, servers, servers + tail_len);
    let n_mean = lq + lambda / mu;
    let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
    let n_q95 = super::stats::pmf_quantile(&pmf, 0.95) as f64;

    // Response T = W_q + S, W_q is 0 w.p. 1 − C and Exp(θ) otherwise.
    let t_mean = wq + 1.0 / mu;
    let t_second = 2.0 * delay / (theta * theta) + 2.0 * wq / mu + 2.0 / (mu * mu);
    let survival = |t: f64| {
        let conv = if (theta - mu).abs() < 1e-12 * mu {
            (1.0 + mu * t) * (-mu * t).exp()
        } else {
            (theta * (-mu * t).exp() - mu * (-theta * t).exp()) / (theta - mu)
        };
        (1.0 - delay) * (-mu * t).exp() + delay * conv
    };
    let (mut lo, mut hi) = (0.0, 1.0 / mu);
    while survival(hi) > 0.05 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if survival(mid) > 0.05 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Ok(AnalyticSummary {
        arrival_rate: lambda,
        service_rate: mu,
        servers,
        rho,
        delay_probability: delay,
        number_in_system: AnalyticMeasure {
            mean: n_mean,
            sd: (second - n_mean * n_mean).max(0.0).sqrt(),
            q95: n_q95,
        },
        response_time: AnalyticMeasure {
            mean: t_mean,
            sd: (t_second - t_mean * t_mean).sqrt(),
            q95: 0.5 * (lo + hi),
        },
        busy_period: busy_period_measure(lambda, c * mu),
        mean_waiting_time: wq,
        mean_queue_length: lq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm1_table_values() {
        let s = mm1_analytic(1.0, 1.1).unwrap();
        assert!((s.number_in_system.mean - 10.0).abs() < 1e-9);
        assert!((s.number_in_system.sd - 10.488_088_481_701_515).abs() < 1e-9);
        assert_eq!(s.number_in_system.q95, 31.0);
        assert!((s.response_time.mean - 10.0).abs() < 1e-9);
        assert!((s.response_time.q95 - 29.957_322_735_539_9).abs() < 1e-9);
        assert!((s.busy_period.mean - 10.0).abs() < 1e-9);
        assert!((s.busy_period.sd - 45.825_756_949_558_4).abs() < 1e-6);
    }

    #[test]
    fn busy_density_integrates_to_one() {
        // Mass up to a large horizon; the heavy tail decays like t^(-3/2) e^(-δt).
        let (lambda, mu) = (1.0, 2.0);
        let q = busy_period_quantile(0.999_999, lambda, mu);
        assert!(q.is_finite());
        let q50 = busy_period_quantile(0.5, lambda, mu);
        assert!(q50 > 0.0 && q50 < 1.0 / (mu - lambda));
    }

    #[test]
    fn bessel_branches_agree() {
        let a = bessel_i1_scaled(20.0);
        // Series evaluated just beyond the switch point.
        let h: f64 = 10.000_000_1;
        let mut term = h;
        let mut sum = h;
        for k in 1..200 {
            term *= h * h / (k as f64 * (k + 1) as f64);
            sum += term;
        }
        let b = sum * (-2.0 * h).exp();
        assert!((a - b).abs() / a < 1e-7);
        assert!((bessel_i1_scaled(1.0) - 0.565_159_103_992_485 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn mmc_reduces_to_mm1() {
        let a = mm1_analytic(0.8, 1.0).unwrap();
        let b = mmc_analytic(0.8, 1.0, 1).unwrap();
        assert!((a.number_in_system.mean - b.number_in_system.mean).abs() < 1e-9);
        assert!((a.number_in_system.sd - b.number_in_system.sd).abs() < 1e-6);
        assert_eq!(a.number_in_system.q95, b.number_in_system.q95);
        assert!((a.response_time.sd - b.response_time.sd).abs() < 1e-9);
        assert!((a.response_time.q95 - b.response_time.q95).abs() < 1e-9);
        assert!((a.delay_probability - b.delay_probability).abs() < 1e-12);
    }

    #[test]
    fn erlang_c_reference() {
        // Two servers, load 1: C = 1/3.
        assert!((erlang_c(1.0, 1.0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let s = mmc_analytic(1.0, 1.0 / 11.0, 12).unwrap();
        assert!((s.number_in_system.mean - s.arrival_rate * s.response_time.mean).abs() < 1e-9);
        let pmf = s.number_pmf(2000);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_rejected() {
        assert!(matches!(mm1_analytic(1.0, 1.0), Err(Error::Unstable { .. })));
        assert!(matches!(mmc_analytic(2.0, 0.5, 4), Err(Error::Unstable { .. })));
    }
}
