//! Push-forward of posterior draws through a forward model to a scalar
//! quantity of interest, with z-value checks against a reference value.
//!
//! For every retained draw the embedded response at the QoI is expanded as
//! before, giving a predictive mean `μ_P` and model-form standard deviation
//! `σ_P`. A realization is drawn from `N(μ_P, σ_P² + σ_N²)`, treating the
//! expanded response as Gaussian (exact for the linear model, an
//! approximation otherwise). The z-value uses the same total standard
//! deviation.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CumulativeHeatModel, ForwardModel};
use crate::pce::{project, Evaluation, HermiteBasis, QuadratureRule};
use crate::problem::PceSettings;
use crate::sampler::EnsembleChain;

pub const Z_CRITICAL: f64 = 1.96;

/// `|μ_P − y| / σ_P`.
pub fn z_value(mu_p: f64, sigma_p: f64, y_obs: f64) -> Result<f64> {
    if sigma_p < 0.0 || !sigma_p.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma_p}")));
    }
    if sigma_p == 0.0 {
        return if mu_p == y_obs {
            Ok(0.0)
        } else {
            Err(Error::InvalidArgument(
                "zero predictive spread with a non-zero residual".into(),
            ))
        };
    }
    Ok((mu_p - y_obs).abs() / sigma_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PushMode {
    /// Thin the posterior to `n_P` draws and propagate each.
    #[default]
    FullPosterior,
    /// Propagate the stored draw with the highest posterior density only.
    MapEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoiSummary {
    pub mean: f64,
    pub std: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl QoiSummary {
    pub fn of(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no samples to summarize".into()));
        }
        let (mean, std) = crate::sampler::mean_std(samples);
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean,
            std,
            q05: quantile(&sorted, 0.05),
            q50: quantile(&sorted, 0.5),
            q95: quantile(&sorted, 0.95),
        })
    }
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Samples of one scalar QoI with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoIDistribution {
    pub name: String,
    pub samples: Vec<f64>,
    pub n_p: usize,
    pub mode: PushMode,
    pub summary: QoiSummary,
}

impl QoIDistribution {
    pub fn new(name: impl Into<String>, samples: Vec<f64>, mode: PushMode) -> Result<Self> {
        let summary = QoiSummary::of(&samples)?;
        Ok(Self {
            name: name.into(),
            n_p: samples.len(),
            samples,
            mode,
            summary,
        })
    }

    pub fn fraction_below(&self, threshold: f64) -> f64 {
        self.samples.iter().filter(|&&v| v < threshold).count() as f64 / self.samples.len() as f64
    }
}

/// The four push-forward quantities at one QoI point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoiSet {
    pub realization: QoIDistribution,
    pub mu_p: QoIDistribution,
    pub sigma_p: QoIDistribution,
    /// Present when a reference value was supplied.
    pub z: Option<QoIDistribution>,
    pub reference: Option<f64>,
    pub noise_std: f64,
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    name: &'a str,
    n_p: usize,
    mode: PushMode,
    mean: f64,
    std: f64,
    q05: f64,
    q50: f64,
    q95: f64,
    #[serde(rename = "z_fraction_below_1.96", skip_serializing_if = "Option::is_none")]
    z_fraction_below: Option<f64>,
}

impl QoiSet {
    fn all(&self) -> Vec<&QoIDistribution> {
        let mut v = vec![&self.realization, &self.mu_p, &self.sigma_p];
        if let Some(z) = &self.z {
            v.push(z);
        }
        v
    }

    /// Sample table with columns `draw,realization,mu_p,sigma_p[,z]`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("draw,realization,mu_p,sigma_p");
        if self.z.is_some() {
            text.push_str(",z");
        }
        text.push('\n');
        let n = self.realization.samples.len();
        for i in 0..n {
            let mu_i = self.mu_p.samples[i % self.mu_p.samples.len()];
            let sd_i = self.sigma_p.samples[i % self.sigma_p.samples.len()];
            text.push_str(&format!(
                "{i},{:.17e},{mu_i:.17e},{sd_i:.17e}",
                self.realization.samples[i]
            ));
            if let Some(z) = &self.z {
                text.push_str(&format!(",{:.17e}", z.samples[i % z.samples.len()]));
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// JSON array of per-QoI summaries.
    pub fn summary_json(&self) -> Result<String> {
        let rows: Vec<JsonSummary> = self
            .all()
            .into_iter()
            .map(|d| JsonSummary {
                name: &d.name,
                n_p: d.n_p,
                mode: d.mode,
                mean: d.summary.mean,
                std: d.summary.std,
                q05: d.summary.q05,
                q50: d.summary.q50,
                q95: d.summary.q95,
                z_fraction_below: (d.name == "z").then(|| d.fraction_below(Z_CRITICAL)),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

/// Push-forward settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushSettings {
    pub n_p: usize,
    pub mode: PushMode,
    pub pce: PceSettings,
    /// Added in quadrature to `σ_P` for realizations and z-values.
    pub noise_std: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for PushSettings {
    fn default() -> Self {
        Self {
            n_p: 1000,
            mode: PushMode::FullPosterior,
            pce: PceSettings::default(),
            noise_std: 0.0,
            seed: 0,
            parallel: false,
        }
    }
}

/// Pushes posterior draws through `model`, whose first output is the QoI.
///
/// Chain samples use the usual layout: `n_embedded` interleaved
/// mean/scale pairs followed by plain parameters.
pub fn push_forward(
    chain: &EnsembleChain,
    n_embedded: usize,
    model: &dyn ForwardModel,
    reference: Option<f64>,
    settings: &PushSettings,
) -> Result<QoiSet> {
    if chain.n_kept_iterations() == 0 && settings.mode == PushMode::FullPosterior {
        return Err(Error::InvalidArgument("chain has no post-burn-in samples".into()));
    }
    if 2 * n_embedded > chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            actual: 2 * n_embedded,
            context: "embedded slots vs chain dimension",
        });
    }
    if settings.n_p == 0 {
        return Err(Error::InvalidArgument("n_P must be at least 1".into()));
    }
    let draws = match settings.mode {
        PushMode::FullPosterior => chain.thinned(settings.n_p)?,
        PushMode::MapEstimate => vec![chain.map_sample()],
    };
    let expansion = if n_embedded > 0 {
        Some((
            HermiteBasis::new(settings.pce.degree, n_embedded)?,
            QuadratureRule::new(settings.pce.order, n_embedded)?,
        ))
    } else {
        None
    };
    let propagate = |sample: &Vec<f64>| -> Result<(f64, f64)> {
        let (means, scales) = crate::problem::split_sample(&sample[..2 * n_embedded]);
        let mut params = means;
        params.extend_from_slice(&sample[2 * n_embedded..]);
        match &expansion {
            Some((basis, quad)) => {
                let r = project(model, &params, &scales, basis, quad, Evaluation::Serial)?;
                Ok((r.mean(0), r.std(0)))
            }
            None => Ok((model.evaluate(&params)?[0], 0.0)),
        }
    };
    let moments: Vec<(f64, f64)> = if settings.parallel {
        draws.par_iter().map(propagate).collect::<Result<_>>()?
    } else {
        draws.iter().map(propagate).collect::<Result<_>>()?
    };

    let mut rng = ChaCha20Rng::seed_from_u64(settings.seed);
    let n_real = match settings.mode {
        PushMode::FullPosterior => moments.len(),
        PushMode::MapEstimate => settings.n_p,
    };
    let realization: Vec<f64> = (0..n_real)
        .map(|i| {
            let (mu, sd) = moments[i % moments.len()];
            let e: f64 = StandardNormal.sample(&mut rng);
            mu + (sd * sd + settings.noise_std * settings.noise_std).sqrt() * e
        })
        .collect();
    let z = match reference {
        Some(y) => Some(QoIDistribution::new(
            "z",
            moments
                .iter()
                .map(|&(mu, sd)| z_value(mu, (sd * sd + settings.noise_std * settings.noise_std).sqrt(), y))
                .collect::<Result<_>>()?,
            settings.mode,
        )?),
        None => None,
    };
    Ok(QoiSet {
        realization: QoIDistribution::new("realization", realization, settings.mode)?,
        mu_p: QoIDistribution::new("mu_p", moments.iter().map(|m| m.0).collect(), settings.mode)?,
        sigma_p: QoIDistribution::new("sigma_p", moments.iter().map(|m| m.1).collect(), settings.mode)?,
        z,
        reference,
        noise_std: settings.noise_std,
    })
}

/// Cumulative-heat push-forward for a chain over one embedded diffusivity.
/// The heat is computed noise-free, so only the embedding contributes to
/// `σ_P`.
pub fn cumulative_heat_qoi(
    chain: &EnsembleChain,
    model: &CumulativeHeatModel,
    reference_j: Option<f64>,
    settings: &PushSettings,
) -> Result<QoiSet> {
    let settings = PushSettings {
        noise_std: 0.0,
        ..*settings
    };
    push_forward(chain, 1, model, reference_j, &settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_examples() {
        assert!((z_value(5.0, 0.5, 5.04).unwrap() - 0.08).abs() < 1e-12);
        assert_eq!(z_value(3.0, 0.2, 3.0).unwrap(), 0.0);
        assert_eq!(z_value(3.0, 0.0, 3.0).unwrap(), 0.0);
        assert!(z_value(3.0, 0.0, 3.1).is_err());
    }

    #[test]
    fn quantiles() {
        let s = QoiSummary::of(&(0..=100).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(s.q50, 50.0);
        assert_eq!(s.q05, 5.0);
        assert_eq!(s.q95, 95.0);
        assert!(QoiSummary::of(&[]).is_err());
    }
}
