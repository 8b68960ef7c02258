use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi2_quantile, ln_gamma};

/// Minimum effective sample size for a `p`-dimensional posterior mean to be
/// known within relative precision `ε` at confidence `1 − α`:
///
/// `W = 2^{2/p} π / (p Γ(p/2))^{2/p} · χ²_{1−α,p} / ε²`
pub fn ess_threshold(p: usize, alpha: f64, precision: f64) -> Result<f64> {
    if p == 0 || !(alpha > 0.0 && alpha < 1.0) || !(precision > 0.0 && precision.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ESS threshold needs p >= 1, 0 < alpha < 1, precision > 0 (got {p}, {alpha}, {precision})"
        )));
    }
    let pf = p as f64;
    let log_denom = (pf.ln() + ln_gamma(pf / 2.0)) * 2.0 / pf;
    let prefactor = (2.0f64.ln() * 2.0 / pf + std::f64::consts::PI.ln() - log_denom).exp();
    Ok(prefactor * chi2_quantile(1.0 - alpha, pf) / (precision * precision))
}

/// Stopping-rule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssCriterion {
    pub alpha: f64,
    pub precision: f64,
}

impl Default for EssCriterion {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            precision: 0.15,
        }
    }
}

impl EssCriterion {
    pub fn threshold(&self, p: usize) -> Result<f64> {
        ess_threshold(p, self.alpha, self.precision)
    }
}

/// `ESS = n·m/τ̂`.
pub fn effective_sample_size(n_iterations: usize, n_walkers: usize, tau: f64) -> f64 {
    (n_iterations * n_walkers) as f64 / tau
}
