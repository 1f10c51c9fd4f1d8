//! Seedable inverse-CDF samplers for exponential, Laplace and Gumbel noise.
//!
//! Exponential noise is parameterized by its rate, Laplace and Gumbel noise
//! by their scale.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Deterministic generator state. Equal seeds yield bitwise-identical
/// streams. Not meant to be shared between threads; give each worker its
/// own seed.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha12Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw on the open interval (0, 1), built from 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `true` with probability `p`. `p >= 1` always succeeds.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform random permutation of `0..n` (Fisher–Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.inner);
        order
    }

    pub fn sample(&mut self, kind: NoiseKind) -> f64 {
        kind.sample(self)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("{kind} parameter must be positive and finite (got {value})")]
    InvalidParameter { kind: &'static str, value: f64 },
}

/// A noise distribution with a validated parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Density `λ e^{−λx}` on `x >= 0`.
    Exponential { rate: f64 },
    /// Density `e^{−|x|/α} / 2α`.
    Laplace { scale: f64 },
    /// Density `(1/α) exp(−x/α − e^{−x/α})`.
    Gumbel { scale: f64 },
}

fn check(kind: &'static str, value: f64) -> Result<f64, NoiseError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(NoiseError::InvalidParameter { kind, value })
    }
}

impl NoiseKind {
    pub fn exponential(rate: f64) -> Result<Self, NoiseError> {
        check("exponential rate", rate).map(|rate| NoiseKind::Exponential { rate })
    }

    pub fn laplace(scale: f64) -> Result<Self, NoiseError> {
        check("laplace scale", scale).map(|scale| NoiseKind::Laplace { scale })
    }

    pub fn gumbel(scale: f64) -> Result<Self, NoiseError> {
        check("gumbel scale", scale).map(|scale| NoiseKind::Gumbel { scale })
    }

    pub fn family(&self) -> NoiseFamily {
        match self {
            NoiseKind::Exponential { .. } => NoiseFamily::Exponential,
            NoiseKind::Laplace { .. } => NoiseFamily::Laplace,
            NoiseKind::Gumbel { .. } => NoiseFamily::Gumbel,
        }
    }

    /// One draw via the inverse CDF of a single uniform.
    pub fn sample(&self, rng: &mut RngState) -> f64 {
        self.quantile(rng.uniform())
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            NoiseKind::Exponential { rate } => -(-u).ln_1p() / rate,
            NoiseKind::Laplace { scale } => {
                if u < 0.5 {
                    scale * (2.0 * u).ln()
                } else {
                    -scale * (2.0 - 2.0 * u).ln()
                }
            }
            NoiseKind::Gumbel { scale } => -scale * (-u.ln()).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NoiseKind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            NoiseKind::Laplace { scale } => {
                if x < 0.0 {
                    0.5 * (x / scale).exp()
                } else {
                    1.0 - 0.5 * (-x / scale).exp()
                }
            }
            NoiseKind::Gumbel { scale } => (-(-x / scale).exp()).exp(),
        }
    }

    /// `1 − cdf(x)`, computed without cancellation in the upper tail.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            NoiseKind::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            NoiseKind::Laplace { scale } => {
                if x < 0.0 {
                    1.0 - 0.5 * (x / scale).exp()
                } else {
                    0.5 * (-x / scale).exp()
                }
            }
            NoiseKind::Gumbel { scale } => -(-(-x / scale).exp()).exp_m1(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NoiseKind::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            NoiseKind::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
            NoiseKind::Gumbel { scale } => {
                let z = x / scale;
                (-z - (-z).exp()).exp() / scale
            }
        }
    }

    /// Interval outside of which each tail carries less than `tail` mass.
    pub fn support_bounds(&self, tail: f64) -> (f64, f64) {
        match *self {
            NoiseKind::Exponential { rate } => (0.0, -tail.ln() / rate),
            NoiseKind::Laplace { scale } => {
                let r = -scale * (2.0 * tail).ln();
                (-r, r)
            }
            // lower: exp(−e^{−x/α}) = tail; upper: 1 − exp(−e^{−x/α}) = tail
            NoiseKind::Gumbel { scale } => (
                -scale * (-tail.ln()).ln(),
                -scale * (-(-tail).ln_1p()).ln(),
            ),
        }
    }
}

/// Noise family without its parameter; the parameter is derived from the
/// privacy parameters (rate `ε/2Δ`, or scale `2Δ/ε`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseFamily {
    Exponential,
    Laplace,
    Gumbel,
}

impl NoiseFamily {
    /// Concrete noise for a rate `λ = ε/(2Δ)`.
    pub fn with_rate(self, rate: f64) -> Result<NoiseKind, NoiseError> {
        match self {
            NoiseFamily::Exponential => NoiseKind::exponential(rate),
            NoiseFamily::Laplace => NoiseKind::laplace(1.0 / rate),
            NoiseFamily::Gumbel => NoiseKind::gumbel(1.0 / rate),
        }
    }
}
