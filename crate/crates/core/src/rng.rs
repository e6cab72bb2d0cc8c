//! Seeded random streams and the primitive variate generators used throughout
//! the crate.
//!
//! Every stream is a ChaCha12 generator keyed by a root seed and a 64-bit stream
//! id. Stream ids combine a [`Substream`] tag with an index (usually the
//! replication number), so the arrival draws of replication 3 never depend on
//! how many service draws replication 2 consumed.
//!
//! The variate algorithms are implemented here rather than taken from a
//! distributions crate so that a given seed yields the same values on every
//! platform and across dependency upgrades:
//!
//! * uniform: top 53 bits of a `u64`, shifted by half an ulp onto (0, 1);
//! * standard normal: Marsaglia's polar method, spare value discarded;
//! * gamma: Marsaglia and Tsang (2000) squeeze/rejection, with the
//!   `G(k) = G(k + 1) * U^(1/k)` boost for shapes below one;
//! * exponential: inversion, `-ln U`.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Named purposes for independent random streams derived from one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Substream {
    Sampling = 1,
    Arrivals = 2,
    Services = 3,
    Calibration = 4,
    Generator = 5,
    Replication = 6,
}

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
}

const TWO_POW_MINUS_53: f64 = 1.0 / 9_007_199_254_740_992.0;

impl RandomStream {
    /// Stream 0 of the given seed.
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// An independent stream for `(kind, index)` under `seed`.
    pub fn substream(seed: u64, kind: Substream, index: u32) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(((kind as u64) << 32) | index as u64);
        Self { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_MINUS_53
    }

    /// Unit-rate exponential.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Gamma variate with the given shape and unit scale.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape == 1.0 {
            return self.exponential();
        }
        if shape < 1.0 {
            let boost = self.uniform().powf(1.0 / shape);
            return self.gamma_large(shape + 1.0) * boost;
        }
        self.gamma_large(shape)
    }

    fn gamma_large(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}
