//! Moment-matching log-likelihoods with explicit measurement noise.
//!
//! All four formulations consume the predictive mean `μʰ` and the
//! model-only predictive standard deviation `σʰ` of every observation,
//! together with the prescribed homogeneous noise scale `σ_N`:
//!
//! * [`log_abc`]: noisy ABC moment matching; means matched under the noise
//!   model, `σʰ + σ_N` matched to `γ|μʰ − y|` up to a tolerance `ε`.
//! * [`log_in`]: independent normal residuals with variance `σʰ² + σ_N²`.
//! * [`log_gmm`]: the residuals are treated as a sample of the equal-weight
//!   Gaussian mixture of centered predictive distributions; the sample mean
//!   is scored with its normal sampling distribution and the sample second
//!   moment with a χ²_{n−1} density.
//! * [`log_rgmm`]: as GMM, on residuals standardized by the predictive
//!   standard deviation (mixture variance 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// `γ = √(π/2)`: makes `σʰ + σ_N` match the residual scale rather than the
/// mean absolute residual of a normal variable.
pub const DEFAULT_GAMMA: f64 = 1.253_314_137_315_500_3;

/// Which likelihood to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LikelihoodKind {
    Abc {
        epsilon: f64,
        gamma: f64,
    },
    #[serde(rename = "in")]
    IndependentNormal,
    Gmm,
    Rgmm,
}

impl LikelihoodKind {
    pub fn abc(epsilon: f64) -> Self {
        LikelihoodKind::Abc {
            epsilon,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LikelihoodKind::Abc { .. } => "ABC",
            LikelihoodKind::IndependentNormal => "IN",
            LikelihoodKind::Gmm => "GMM",
            LikelihoodKind::Rgmm => "RGMM",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LikelihoodKind::Abc { epsilon, gamma } = *self {
            if !(epsilon > 0.0 && epsilon.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "ABC needs epsilon > 0 and gamma > 0 (got {epsilon}, {gamma})"
                )));
            }
        }
        Ok(())
    }
}

/// How the sample second moment of the residuals is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceCentering {
    /// Σuᵢ²/(n−1): second moment about the known zero mean of the mixture.
    #[default]
    Zero,
    /// Σ(uᵢ − ū)²/(n−1): the ordinary unbiased sample variance.
    SampleMean,
}

/// Predictive moments at the observation points plus the noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub noise_std: f64,
}

impl MomentSummary {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, noise_std: f64) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                actual: sigma.len(),
                context: "mu vs sigma",
            });
        }
        if mu.is_empty() {
            return Err(Error::Likelihood("no observations".into()));
        }
        if mu.iter().chain(&sigma).any(|v| !v.is_finite()) || sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::Likelihood("non-finite or negative predictive moments".into()));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise std {noise_std}")));
        }
        Ok(Self { mu, sigma, noise_std })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    fn check_observations(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.mu.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu.len(),
                actual: y.len(),
                context: "observations vs predictions",
            });
        }
        Ok(())
    }
}

/// Noisy ABC moment-matching log-likelihood.
pub fn log_abc(ms: &MomentSummary, y: &[f64], epsilon: f64, gamma: f64) -> Result<f64> {
    ms.check_observations(y)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let sn = ms.noise_std;
    if sn <= 0.0 {
        return Err(Error::Likelihood("ABC likelihood needs a positive noise std".into()));
    }
    let n = y.len() as f64;
    let mut acc = -0.5 * n * (2.0 * std::f64::consts::PI * epsilon * epsilon * sn * sn).ln();
    for ((&mu, &sigma), &yi) in ms.mu.iter().zip(&ms.sigma).zip(y) {
        let r = mu - yi;
        let spread = sigma + sn - gamma * r.abs();
        acc -= r * r / (2.0 * sn * sn) + spread * spread / (2.0 * epsilon * epsilon);
    }
    Ok(acc)
}

/// Independent-normal log-likelihood with total variance `σʰ² + σ_N²`.
pub fn log_in(ms: &MomentSummary, y: &[f64]) -> Result<f64> {
    ms.check_observations(y)?;
    let n = y.len() as f64;
    let mut acc = -0.5 * n * (2.0 * std::f64::consts::PI).ln();
    for ((&mu, &sigma), &yi) in ms.mu.iter().zip(&ms.sigma).zip(y) {
        let var = sigma * sigma + ms.noise_std * ms.noise_std;
        if var <= 0.0 {
            return Err(Error::Likelihood("zero total predictive variance".into()));
        }
        let r = yi - mu;
        acc -= 0.5 * var.ln() + r * r / (2.0 * var);
    }
    Ok(acc)
}

/// Raw and standardized residual statistics for the global likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub residuals: Vec<f64>,
    pub relative_residuals: Vec<f64>,
    pub mean: f64,
    pub relative_mean: f64,
    pub second_moment: f64,
    pub relative_second_moment: f64,
    pub mixture_variance: f64,
    pub relative_mixture_variance: f64,
}

impl ResidualStats {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }
}

pub fn residual_stats(ms: &MomentSummary, y: &[f64]) -> Result<ResidualStats> {
    residual_stats_with(ms, y, VarianceCentering::Zero)
}

pub fn residual_stats_with(ms: &MomentSummary, y: &[f64], centering: VarianceCentering) -> Result<ResidualStats> {
    ms.check_observations(y)?;
    let n = y.len();
    if n < 2 {
        return Err(Error::Likelihood(format!("need at least 2 observations, got {n}")));
    }
    let s2n = ms.noise_std * ms.noise_std;
    let residuals: Vec<f64> = y.iter().zip(&ms.mu).map(|(yi, mu)| yi - mu).collect();
    let relative_residuals: Vec<f64> = residuals
        .iter()
        .zip(&ms.sigma)
        .map(|(u, s)| {
            let var = s * s + s2n;
            if var > 0.0 {
                Ok(u / var.sqrt())
            } else {
                Err(Error::Likelihood("zero total predictive variance".into()))
            }
        })
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let relative_mean = relative_residuals.iter().sum::<f64>() / nf;
    let second = |v: &[f64], center: f64| v.iter().map(|u| (u - center).powi(2)).sum::<f64>() / (nf - 1.0);
    let (c, cr) = match centering {
        VarianceCentering::Zero => (0.0, 0.0),
        VarianceCentering::SampleMean => (mean, relative_mean),
    };
    let mixture_variance = ms.sigma.iter().map(|s| s * s).sum::<f64>() / nf + s2n;
    Ok(ResidualStats {
        second_moment: second(&residuals, c),
        relative_second_moment: second(&relative_residuals, cr),
        residuals,
        relative_residuals,
        mean,
        relative_mean,
        mixture_variance,
        relative_mixture_variance: 1.0,
    })
}

/// Log of the normal sampling density of the residual mean, N(0, σ_F²/n).
pub fn mean_term(mean: f64, mixture_variance: f64, n: usize) -> f64 {
    let nf = n as f64;
    -0.5 * (2.0 * std::f64::consts::PI * mixture_variance / nf).ln() - nf * mean * mean / (2.0 * mixture_variance)
}

/// χ²_{n−1} log-density evaluated at `n ŝ²/σ_F²`.
pub fn variance_term(second_moment: f64, mixture_variance: f64, n: usize) -> f64 {
    if second_moment <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    let k = 0.5 * (nf - 1.0);
    let x = nf * second_moment / mixture_variance;
    -k * 2f64.ln() - ln_gamma(k) - 0.5 * x + (k - 1.0) * x.ln()
}

fn global_check(variance: f64, n_stats: usize, n: usize) -> Result<()> {
    if n < 2 || n_stats != n {
        return Err(Error::Likelihood(format!(
            "global likelihood needs n_y >= 2 matching the residuals (n_y = {n})"
        )));
    }
    if !(variance > 0.0) {
        return Err(Error::Likelihood("mixture variance must be positive".into()));
    }
    Ok(())
}

/// Global moment-matching log-likelihood. Returns −∞ when every residual is
/// exactly zero.
pub fn log_gmm(stats: &ResidualStats, n_y: usize) -> Result<f64> {
    global_check(stats.mixture_variance, stats.n(), n_y)?;
    Ok(mean_term(stats.mean, stats.mixture_variance, n_y)
        + variance_term(stats.second_moment, stats.mixture_variance, n_y))
}

/// Relative global moment-matching log-likelihood (standardized residuals,
/// unit mixture variance).
pub fn log_rgmm(stats: &ResidualStats, n_y: usize) -> Result<f64> {
    global_check(stats.relative_mixture_variance, stats.n(), n_y)?;
    Ok(mean_term(stats.relative_mean, stats.relative_mixture_variance, n_y)
        + variance_term(stats.relative_second_moment, stats.relative_mixture_variance, n_y))
}

/// Evaluates the selected likelihood from predictive moments.
pub fn evaluate(kind: &LikelihoodKind, ms: &MomentSummary, y: &[f64], centering: VarianceCentering) -> Result<f64> {
    match *kind {
        LikelihoodKind::Abc { epsilon, gamma } => log_abc(ms, y, epsilon, gamma),
        LikelihoodKind::IndependentNormal => log_in(ms, y),
        LikelihoodKind::Gmm => log_gmm(&residual_stats_with(ms, y, centering)?, y.len()),
        LikelihoodKind::Rgmm => log_rgmm(&residual_stats_with(ms, y, centering)?, y.len()),
    }
}
