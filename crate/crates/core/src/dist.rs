//! One-dimensional prior distributions.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar distribution used for priors.
///
/// `LogNormal` is parameterized by the mean and standard deviation of the
/// underlying normal (`log_mean`, `log_std`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution1D {
    Normal { mean: f64, std: f64 },
    LogNormal { log_mean: f64, log_std: f64 },
    Uniform { low: f64, high: f64 },
}

impl Distribution1D {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        Distribution1D::Normal { mean, std }.validated()
    }

    pub fn log_normal(log_mean: f64, log_std: f64) -> Result<Self> {
        Distribution1D::LogNormal { log_mean, log_std }.validated()
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Distribution1D::Uniform { low, high }.validated()
    }

    /// Checks the parameter invariants, returning `self` on success.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Distribution1D::Normal { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
            Distribution1D::LogNormal { log_mean, log_std } => {
                log_mean.is_finite() && log_std.is_finite() && log_std > 0.0
            }
            Distribution1D::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidDistribution(format!("{self:?}")))
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Distribution1D::Normal { mean, std } => {
                let z = (x - mean) / std;
                -0.5 * z * z - std.ln() - 0.5 * (2.0 * PI).ln()
            }
            Distribution1D::LogNormal { log_mean, log_std } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let z = (lx - log_mean) / log_std;
                -0.5 * z * z - log_std.ln() - lx - 0.5 * (2.0 * PI).ln()
            }
            Distribution1D::Uniform { low, high } => {
                if (low..=high).contains(&x) {
                    -(high - low).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Whether the density is zero everywhere on `(-inf, 0]`.
    pub fn is_strictly_positive(&self) -> bool {
        match *self {
            Distribution1D::Normal { .. } => false,
            Distribution1D::LogNormal { .. } => true,
            Distribution1D::Uniform { low, .. } => low >= 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution1D::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            Distribution1D::LogNormal { log_mean, log_std } => {
                let z: f64 = StandardNormal.sample(rng);
                (log_mean + log_std * z).exp()
            }
            Distribution1D::Uniform { low, high } => {
                let u: f64 = rng.random();
                low + (high - low) * u
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution1D::Normal { mean, .. } => mean,
            Distribution1D::LogNormal { log_mean, log_std } => (log_mean + 0.5 * log_std * log_std).exp(),
            Distribution1D::Uniform { low, high } => 0.5 * (low + high),
        }
    }
}
