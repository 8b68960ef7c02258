//! Experiment configuration files.
//!
//! ```toml
//! experiment = "linear_noise_scan"
//! likelihoods = ["abc", "in", "gmm", "rgmm"]
//! seeds = [1]
//! output_dir = "results/noise"
//!
//! [sampler]
//! max_samples = 20000
//!
//! [scan]
//! values = [0.001, 0.01, 0.1, 1.0]
//! ```
//!
//! Every section is optional; omitted values fall back to the study
//! defaults of the chosen experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use embedcal::datagen::{LinearGenSpec, ThermalGenSpec};
use embedcal::problem::{to_kind, LikelihoodName};
use embedcal::qoi::PushMode;
use embedcal::sampler::EssCriterion;
use embedcal::studies::{linear_sampler_defaults, thermal_sampler_defaults, LinearPriors, ScanKind, ThermalPriors};
use embedcal::{LikelihoodKind, PceSettings, SamplerConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    Linear,
    LinearNoiseScan,
    LinearOffsetScan,
    LinearOutlierScan,
    LinearSeedReplication,
    Thermal,
}

impl ExperimentKind {
    pub fn scan(&self) -> Option<ScanKind> {
        match self {
            ExperimentKind::LinearNoiseScan => Some(ScanKind::Noise),
            ExperimentKind::LinearOffsetScan => Some(ScanKind::Offset),
            ExperimentKind::LinearOutlierScan => Some(ScanKind::Outlier),
            _ => None,
        }
    }

    pub fn is_thermal(&self) -> bool {
        matches!(self, ExperimentKind::Thermal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "all_likelihood_names")]
    pub likelihoods: Vec<LikelihoodName>,
    /// ABC tolerance.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Seeds for data generation and sampling. Defaults to `[1]`, or
    /// `1..=20` for seed replication.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sampler: SamplerOverrides,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub thermal: ThermalSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub push: PushSection,
}

fn all_likelihood_names() -> Vec<LikelihoodName> {
    LikelihoodName::ALL.to_vec()
}

fn default_epsilon() -> f64 {
    0.05
}

/// Sampler fields to override on top of the study defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerOverrides {
    pub n_walkers: Option<usize>,
    pub burn_in: Option<usize>,
    pub batch: Option<usize>,
    pub max_samples: Option<usize>,
    pub ess_target: Option<f64>,
    pub criterion: Option<EssCriterion>,
    pub stretch: Option<f64>,
    pub parallel: Option<bool>,
}

impl SamplerOverrides {
    pub fn apply(&self, mut c: SamplerConfig) -> SamplerConfig {
        if let Some(v) = self.n_walkers {
            c.n_walkers = v;
        }
        if let Some(v) = self.burn_in {
            c.burn_in = v;
        }
        if let Some(v) = self.batch {
            c.batch = v;
        }
        if let Some(v) = self.max_samples {
            c.max_samples = v;
        }
        if self.ess_target.is_some() {
            c.ess_target = self.ess_target;
        }
        if let Some(v) = self.criterion {
            c.criterion = v;
        }
        if let Some(v) = self.stretch {
            c.stretch = v;
        }
        if let Some(v) = self.parallel {
            c.parallel = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSection {
    /// Generator settings; `seed` and `variant` are set per run.
    pub data: LinearGenSpec,
    /// σ_N prescribed in the likelihood; the generator noise when absent.
    pub noise_std: Option<f64>,
    pub priors: LinearPriors,
    /// Embed the slope, or calibrate it as a plain parameter.
    pub embedded: bool,
    /// Abscissa of the push-forward.
    pub qoi_x: f64,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self {
            data: LinearGenSpec::default(),
            noise_std: None,
            priors: LinearPriors::default(),
            embedded: true,
            qoi_x: 1.0,
        }
    }
}

impl LinearSection {
    pub fn prescribed_noise(&self) -> f64 {
        self.noise_std.unwrap_or(self.data.noise_std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    /// Generator settings; `seed` is set per run.
    pub data: ThermalGenSpec,
    pub priors: ThermalPriors,
    /// Elements per side of the calibration and QoI mesh.
    pub mesh_elements: usize,
    pub pce: PceSettings,
}

impl Default for ThermalSection {
    fn default() -> Self {
        Self {
            data: ThermalGenSpec::default(),
            priors: ThermalPriors::default(),
            mesh_elements: 10,
            pce: PceSettings { degree: 2, order: 3 },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    /// Scan grid; the experiment's default grid when absent.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushSection {
    pub n_p: usize,
    pub mode: PushMode,
}

impl Default for PushSection {
    fn default() -> Self {
        Self {
            n_p: 1000,
            mode: PushMode::FullPosterior,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            likelihoods: all_likelihood_names(),
            epsilon: default_epsilon(),
            seeds: None,
            output_dir: None,
            sampler: SamplerOverrides::default(),
            linear: LinearSection::default(),
            thermal: ThermalSection::default(),
            scan: ScanSection::default(),
            push: PushSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok((Self::from_toml_str(&text)?, text))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.likelihoods.is_empty() {
            return Err(CliError::Config("no likelihoods selected".into()));
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(CliError::Config("empty seed list".into()));
        }
        if let Some(values) = &self.scan.values {
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("scan values must be finite and non-empty".into()));
            }
            if self.experiment == ExperimentKind::LinearNoiseScan && values.iter().any(|&v| v <= 0.0) {
                return Err(CliError::Config("noise scan values must be positive".into()));
            }
        }
        if self.push.n_p == 0 {
            return Err(CliError::Config("push.n_p must be at least 1".into()));
        }
        for kind in self.likelihood_kinds() {
            kind.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn likelihood_kinds(&self) -> Vec<LikelihoodKind> {
        self.likelihoods
            .iter()
            .map(|&n| to_kind(n, self.epsilon, embedcal::likelihood::DEFAULT_GAMMA))
            .collect()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None if self.experiment == ExperimentKind::LinearSeedReplication => (1..=20).collect(),
            None => vec![1],
        }
    }

    pub fn scan_values(&self) -> Vec<f64> {
        match (&self.scan.values, self.experiment.scan()) {
            (Some(v), _) => v.clone(),
            (None, Some(kind)) => kind.default_grid(),
            (None, None) => Vec::new(),
        }
    }

    pub fn sampler_for(&self, seed: u64) -> SamplerConfig {
        let base = if self.experiment.is_thermal() {
            thermal_sampler_defaults(seed)
        } else {
            linear_sampler_defaults(seed)
        };
        self.sampler.apply(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("experiment = \"linear\"").unwrap();
        assert_eq!(c.likelihoods.len(), 4);
        assert_eq!(c.seed_list(), vec![1]);
        assert_eq!(c.linear.data.n_points, 120);
        assert_eq!(c.sampler_for(3), linear_sampler_defaults(3));
    }

    #[test]
    fn replication_defaults_to_twenty_seeds() {
        let c = ExperimentConfig::new(ExperimentKind::LinearSeedReplication);
        assert_eq!(c.seed_list(), (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn overrides_and_grids() {
        let c = ExperimentConfig::from_toml_str(
            "experiment = \"linear_noise_scan\"\nlikelihoods = [\"in\"]\n[sampler]\nmax_samples = 50\n",
        )
        .unwrap();
        assert_eq!(c.sampler_for(1).max_samples, 50);
        let grid = c.scan_values();
        assert_eq!(grid.len(), 20);
        assert_eq!(grid[19], 10.0);
        assert_eq!(c.likelihood_kinds(), vec![LikelihoodKind::IndependentNormal]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("experiment = \"quadratic\"").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"linear\"\nlikelihoods = []").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"linear\"\ntypo = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"linear\"\nepsilon = 0.0").is_err());
        assert!(
            ExperimentConfig::from_toml_str("experiment = \"linear_noise_scan\"\n[scan]\nvalues = [0.0, 1.0]").is_err()
        );
    }

    #[test]
    fn thermal_sampler_is_parallel_by_default() {
        let c = ExperimentConfig::new(ExperimentKind::Thermal);
        assert!(c.sampler_for(1).parallel);
        assert_eq!(c.thermal.pce, PceSettings { degree: 2, order: 3 });
    }
}
