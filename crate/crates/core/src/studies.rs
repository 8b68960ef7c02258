//! Ready-made problems and runners for the two application studies: the
//! scattered-slope linear model and the reinforced-section heating model.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datagen::{SensorData, ThermalGenSpec};
use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::models::{CumulativeHeatModel, LinearModel, Mesh, ThermalSensorModel};
use crate::pce::Evaluation;
use crate::problem::{EmbeddedParameter, InferenceProblem, ObservationSet, PceSettings, PlainParameter};
use crate::qoi::{push_forward, PushSettings, QoiSet};
use crate::sampler::{run_problem, EnsembleChain, SamplerConfig};

/// Priors of the linear study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPriors {
    pub slope: Distribution1D,
    pub scale: Distribution1D,
}

impl Default for LinearPriors {
    fn default() -> Self {
        Self {
            slope: Distribution1D::Normal { mean: 4.5, std: 0.5 },
            scale: Distribution1D::LogNormal {
                log_mean: -1.0,
                log_std: 0.5,
            },
        }
    }
}

/// Linear problem with an embedded slope `t` (parameters `t.mean`,
/// `t.scale`), or with a plain slope `t` when `embedded` is false.
pub fn linear_problem(
    observations: &ObservationSet,
    noise_std: f64,
    likelihood: LikelihoodKind,
    priors: &LinearPriors,
    embedded: bool,
) -> Result<InferenceProblem> {
    let obs = ObservationSet::new(observations.x.clone(), observations.y.clone(), noise_std)?;
    let model = Arc::new(LinearModel::new(obs.x.clone())?);
    let (emb, plain) = if embedded {
        (vec![EmbeddedParameter::new("t", priors.slope, priors.scale)?], vec![])
    } else {
        (vec![], vec![PlainParameter::new("t", priors.slope)?])
    };
    InferenceProblem::new(emb, plain, model, obs, likelihood, PceSettings { degree: 1, order: 2 })
}

pub fn linear_sampler_defaults(seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_walkers: 10,
        burn_in: 200,
        seed,
        ..SamplerConfig::default()
    }
}

pub fn thermal_sampler_defaults(seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_walkers: 10,
        burn_in: 250,
        seed,
        parallel: true,
        ..SamplerConfig::default()
    }
}

/// Priors of the thermal study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalPriors {
    pub diffusivity: Distribution1D,
    pub scale: Distribution1D,
}

impl Default for ThermalPriors {
    fn default() -> Self {
        Self {
            diffusivity: Distribution1D::Normal { mean: 1e-6, std: 1e-7 },
            scale: Distribution1D::LogNormal {
                log_mean: -16.0,
                log_std: 0.1,
            },
        }
    }
}

/// Isotropic concrete model sampled like `data`. The right edge follows the
/// noise-free ramp of `spec`, so the data's external fluctuations are left
/// unmodelled.
pub fn thermal_sensor_model(
    data: &SensorData,
    spec: &ThermalGenSpec,
    mesh_elements: usize,
) -> Result<ThermalSensorModel> {
    if data.n_sensors != spec.sensors.len() {
        return Err(Error::Config(format!(
            "expected {} sensors, got {}",
            spec.sensors.len(),
            data.n_sensors
        )));
    }
    let last = data.times_s().last().copied().unwrap_or(0.0);
    let n_steps = (last / spec.time_step_s).ceil() as usize;
    ThermalSensorModel::new(
        Mesh::square(mesh_elements)?,
        spec.concrete,
        spec.nominal_external(n_steps)?,
        spec.sensors.clone(),
        &data.times_s(),
    )
}

/// Thermal problem with an embedded diffusivity `alpha`.
pub fn thermal_problem(
    training: &SensorData,
    spec: &ThermalGenSpec,
    likelihood: LikelihoodKind,
    priors: &ThermalPriors,
    mesh_elements: usize,
    pce: PceSettings,
) -> Result<InferenceProblem> {
    let model = thermal_sensor_model(training, spec, mesh_elements)?;
    let param = EmbeddedParameter::new("alpha", priors.diffusivity, priors.scale)?;
    Ok(InferenceProblem::new(
        vec![param],
        vec![],
        Arc::new(model),
        training.observations()?,
        likelihood,
        pce,
    )?
    .with_evaluation(Evaluation::Serial))
}

/// Cumulative heat into the insulated half over the full horizon under the
/// noise-free ramp.
pub fn thermal_heat_model(spec: &ThermalGenSpec, mesh_elements: usize) -> Result<CumulativeHeatModel> {
    CumulativeHeatModel::new(
        Mesh::square(mesh_elements)?,
        spec.concrete,
        spec.nominal_external(spec.horizon_steps()?)?,
        spec.midline_x_m,
        spec.depth_m,
    )
}

/// One row of a posterior summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub likelihood: String,
    pub seed: u64,
    pub param: String,
    pub mean: f64,
    pub std: f64,
    pub ess: f64,
    pub converged: bool,
}

pub fn summary_rows(likelihood: &str, chain: &EnsembleChain) -> Vec<SummaryRow> {
    chain
        .summary()
        .into_iter()
        .zip(chain.names())
        .zip(chain.ess())
        .map(|(((mean, std), name), &ess)| SummaryRow {
            likelihood: likelihood.to_string(),
            seed: chain.seed(),
            param: name.clone(),
            mean,
            std,
            ess,
            converged: chain.converged(),
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::problem::csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["likelihood", "seed", "param", "mean", "std", "ess", "converged"])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A calibrated chain with its likelihood label.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub likelihood: LikelihoodKind,
    pub chain: EnsembleChain,
}

impl Calibration {
    pub fn rows(&self) -> Vec<SummaryRow> {
        summary_rows(self.likelihood.label(), &self.chain)
    }

    /// Posterior mean of the named parameter.
    pub fn mean_of(&self, name: &str) -> Option<f64> {
        let i = self.chain.names().iter().position(|n| n == name)?;
        Some(self.chain.summary()[i].0)
    }

    pub fn std_of(&self, name: &str) -> Option<f64> {
        let i = self.chain.names().iter().position(|n| n == name)?;
        Some(self.chain.summary()[i].1)
    }
}

pub fn calibrate(problem: &InferenceProblem, sampler: &SamplerConfig) -> Result<Calibration> {
    Ok(Calibration {
        likelihood: *problem.likelihood(),
        chain: run_problem(problem, sampler)?,
    })
}

/// The four likelihoods with default settings.
pub fn all_likelihoods(epsilon: f64) -> [LikelihoodKind; 4] {
    [
        LikelihoodKind::abc(epsilon),
        LikelihoodKind::IndependentNormal,
        LikelihoodKind::Gmm,
        LikelihoodKind::Rgmm,
    ]
}

/// `n` values evenly spaced on a log scale between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    /// Prescribed σ_N in the likelihood.
    Noise,
    /// Constant shift added to the data.
    Offset,
    /// Downward shift of the points with `x ∈ [0.6, 0.7]`.
    Outlier,
}

impl ScanKind {
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            ScanKind::Noise => log_space(0.001, 10.0, 20),
            ScanKind::Offset => lin_space(0.0, 1.0, 11),
            ScanKind::Outlier => lin_space(0.0, 2.0, 21),
        }
    }
}

/// Long-format scan table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub scan_value: f64,
    pub likelihood: String,
    pub seed: u64,
    pub param: String,
    pub mean: f64,
    pub std: f64,
    pub ess: f64,
    pub converged: bool,
}

impl ScanRow {
    pub fn from_summary(scan_value: f64, row: SummaryRow) -> Self {
        Self {
            scan_value,
            likelihood: row.likelihood,
            seed: row.seed,
            param: row.param,
            mean: row.mean,
            std: row.std,
            ess: row.ess,
            converged: row.converged,
        }
    }
}

pub fn write_scan_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::problem::csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Push-forward of a linear chain to `x`, with the observation there as
/// reference.
pub fn linear_qoi(
    chain: &EnsembleChain,
    embedded: bool,
    x: f64,
    y_obs: Option<f64>,
    settings: &PushSettings,
) -> Result<QoiSet> {
    let model = LinearModel::new(vec![x])?;
    push_forward(chain, usize::from(embedded), &model, y_obs, settings)
}
