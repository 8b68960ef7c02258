//! Embedded parameters, observations and the inference problem tying them to
//! a forward model and a likelihood.
//!
//! Sample vectors are laid out as `(θᵐ₁, θᵇ₁, θᵐ₂, θᵇ₂, …, plain₁, plain₂, …)`.
//! The model receives `(θᵐ₁, θᵐ₂, …, plain₁, …)` at every quadrature node,
//! with germ `k` perturbing `θᵐ_k` by `θᵇ_k·ξ_k`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::likelihood::{self, LikelihoodKind, MomentSummary, VarianceCentering, DEFAULT_GAMMA};
use crate::models::ForwardModel;
use crate::pce::{project, Evaluation, HermiteBasis, QuadratureRule};

/// A parameter carrying an additive Gaussian inadequacy term,
/// `θ̃ = θᵐ + θᵇ·ξ`, `ξ ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedParameter {
    pub name: String,
    pub mean_prior: Distribution1D,
    pub scale_prior: Distribution1D,
}

impl EmbeddedParameter {
    pub fn new(name: impl Into<String>, mean_prior: Distribution1D, scale_prior: Distribution1D) -> Result<Self> {
        let p = Self {
            name: name.into(),
            mean_prior: mean_prior.validated()?,
            scale_prior: scale_prior.validated()?,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        self.mean_prior.validated()?;
        self.scale_prior.validated()?;
        if !self.scale_prior.is_strictly_positive() {
            return Err(Error::InvalidDistribution(format!(
                "scale prior of '{}' must have strictly positive support",
                self.name
            )));
        }
        Ok(())
    }
}

/// A deterministic model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainParameter {
    pub name: String,
    pub prior: Distribution1D,
}

impl PlainParameter {
    pub fn new(name: impl Into<String>, prior: Distribution1D) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            prior: prior.validated()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_std: f64,
}

impl ObservationSet {
    pub fn new(x: Vec<f64>, y: Vec<f64>, noise_std: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: y.len(),
                context: "observation x vs y",
            });
        }
        if y.is_empty() {
            return Err(Error::InvalidArgument("observation set is empty".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite observation".into()));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise std must be >= 0, got {noise_std}"
            )));
        }
        Ok(Self { x, y, noise_std })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Reads a CSV with `x` and `y` columns.
    pub fn read_csv(path: &Path, noise_std: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("{}: missing column '{name}'", path.display())))
        };
        let (ix, iy) = (col("x")?, col("y")?);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record?;
            x.push(parse_field(&record, ix, path)?);
            y.push(parse_field(&record, iy, path)?);
        }
        Self::new(x, y, noise_std)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["x", "y"])?;
        for (x, y) in self.x.iter().zip(&self.y) {
            w.write_record([format!("{x:.17e}"), format!("{y:.17e}")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn parse_field(record: &csv::StringRecord, i: usize, path: &Path) -> Result<f64> {
    let raw = record.get(i).unwrap_or("").trim();
    raw.parse::<f64>()
        .map_err(|_| Error::Config(format!("{}: cannot parse '{raw}' as a number", path.display())))
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        }
    } else {
        Error::Csv(e)
    }
}

/// Polynomial chaos settings: total degree and per-germ quadrature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PceSettings {
    pub degree: usize,
    pub order: usize,
}

impl Default for PceSettings {
    fn default() -> Self {
        Self { degree: 1, order: 2 }
    }
}

/// Everything needed to evaluate prior, likelihood and posterior of a sample.
#[derive(Clone)]
pub struct InferenceProblem {
    embedded: Vec<EmbeddedParameter>,
    plain: Vec<PlainParameter>,
    forward: Arc<dyn ForwardModel>,
    observations: ObservationSet,
    likelihood: LikelihoodKind,
    centering: VarianceCentering,
    expansion: Option<(HermiteBasis, QuadratureRule)>,
    evaluation: Evaluation,
}

impl std::fmt::Debug for InferenceProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InferenceProblem")
            .field("embedded", &self.embedded)
            .field("plain", &self.plain)
            .field("n_obs", &self.observations.len())
            .field("likelihood", &self.likelihood)
            .finish()
    }
}

impl InferenceProblem {
    pub fn new(
        embedded: Vec<EmbeddedParameter>,
        plain: Vec<PlainParameter>,
        forward: Arc<dyn ForwardModel>,
        observations: ObservationSet,
        likelihood: LikelihoodKind,
        pce: PceSettings,
    ) -> Result<Self> {
        likelihood.validate()?;
        for p in &embedded {
            p.validate()?;
        }
        let n_model = embedded.len() + plain.len();
        if forward.n_params() != n_model {
            return Err(Error::DimensionMismatch {
                expected: forward.n_params(),
                actual: n_model,
                context: "model parameters vs declared parameters",
            });
        }
        if forward.n_outputs() != observations.len() {
            return Err(Error::DimensionMismatch {
                expected: observations.len(),
                actual: forward.n_outputs(),
                context: "model outputs vs observations",
            });
        }
        if matches!(likelihood, LikelihoodKind::Abc { .. }) && observations.noise_std == 0.0 {
            return Err(Error::InvalidArgument("ABC likelihood requires noise_std > 0".into()));
        }
        let expansion = if embedded.is_empty() {
            None
        } else {
            Some((
                HermiteBasis::new(pce.degree, embedded.len())?,
                QuadratureRule::new(pce.order, embedded.len())?,
            ))
        };
        Ok(Self {
            embedded,
            plain,
            forward,
            observations,
            likelihood,
            centering: VarianceCentering::default(),
            expansion,
            evaluation: Evaluation::Serial,
        })
    }

    pub fn with_centering(mut self, centering: VarianceCentering) -> Self {
        self.centering = centering;
        self
    }

    /// Evaluate quadrature nodes in parallel (useful for expensive models).
    pub fn with_evaluation(mut self, evaluation: Evaluation) -> Self {
        self.evaluation = evaluation;
        self
    }

    pub fn with_likelihood(mut self, likelihood: LikelihoodKind) -> Result<Self> {
        likelihood.validate()?;
        if matches!(likelihood, LikelihoodKind::Abc { .. }) && self.observations.noise_std == 0.0 {
            return Err(Error::InvalidArgument("ABC likelihood requires noise_std > 0".into()));
        }
        self.likelihood = likelihood;
        Ok(self)
    }

    pub fn embedded(&self) -> &[EmbeddedParameter] {
        &self.embedded
    }

    pub fn plain(&self) -> &[PlainParameter] {
        &self.plain
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    pub fn likelihood(&self) -> &LikelihoodKind {
        &self.likelihood
    }

    pub fn forward(&self) -> &Arc<dyn ForwardModel> {
        &self.forward
    }

    pub fn dim(&self) -> usize {
        2 * self.embedded.len() + self.plain.len()
    }

    /// Names of the sample-vector slots: `{name}.mean`, `{name}.scale`, then
    /// plain parameter names.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for p in &self.embedded {
            names.push(format!("{}.mean", p.name));
            names.push(format!("{}.scale", p.name));
        }
        names.extend(self.plain.iter().map(|p| p.name.clone()));
        names
    }

    fn check_dim(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: sample.len(),
                context: "sample vector",
            });
        }
        Ok(())
    }

    /// Sum of component log-priors; `−∞` outside the support.
    pub fn log_prior(&self, sample: &[f64]) -> Result<f64> {
        self.check_dim(sample)?;
        let mut lp = 0.0;
        for (i, p) in self.embedded.iter().enumerate() {
            let scale = sample[2 * i + 1];
            if !(scale > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            lp += p.mean_prior.log_pdf(sample[2 * i]) + p.scale_prior.log_pdf(scale);
        }
        let off = 2 * self.embedded.len();
        for (i, p) in self.plain.iter().enumerate() {
            lp += p.prior.log_pdf(sample[off + i]);
        }
        Ok(if lp.is_nan() { f64::NEG_INFINITY } else { lp })
    }

    /// Model parameter vector (embedded means followed by plain values) and
    /// the embedded scales.
    pub fn split_sample(&self, sample: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dim(sample)?;
        let n = self.embedded.len();
        let (means, scales) = split_sample(&sample[..2 * n]);
        let mut model = means;
        model.extend_from_slice(&sample[2 * n..]);
        Ok((model, scales))
    }

    /// Predictive mean and model-only standard deviation at every
    /// observation point.
    pub fn moment_summary(&self, sample: &[f64]) -> Result<MomentSummary> {
        let (params, scales) = self.split_sample(sample)?;
        let (mu, sigma) = match &self.expansion {
            Some((basis, quad)) => {
                project(self.forward.as_ref(), &params, &scales, basis, quad, self.evaluation)?.moments()
            }
            None => {
                let mu = self.forward.evaluate(&params)?;
                let n = mu.len();
                (mu, vec![0.0; n])
            }
        };
        MomentSummary::new(mu, sigma, self.observations.noise_std)
    }

    pub fn log_likelihood(&self, sample: &[f64]) -> Result<f64> {
        let ms = self.moment_summary(sample)?;
        likelihood::evaluate(&self.likelihood, &ms, &self.observations.y, self.centering)
    }

    /// Log posterior up to a constant. Samples outside the prior support and
    /// samples at which the forward model cannot be evaluated score `−∞`.
    pub fn log_posterior(&self, sample: &[f64]) -> Result<f64> {
        let lp = self.log_prior(sample)?;
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        match self.log_likelihood(sample) {
            Ok(ll) if ll.is_nan() => Ok(f64::NEG_INFINITY),
            Ok(ll) => Ok(lp + ll),
            Err(Error::ModelEvaluation { .. } | Error::Model(_) | Error::Likelihood(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    /// Draws one sample from the joint prior.
    pub fn sample_prior<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for p in &self.embedded {
            out.push(p.mean_prior.sample(rng));
            out.push(p.scale_prior.sample(rng));
        }
        out.extend(self.plain.iter().map(|p| p.prior.sample(rng)));
        out
    }
}

/// De-interleaves `(m₁, b₁, m₂, b₂, …)` into `([m…], [b…])`.
pub fn split_sample(sample: &[f64]) -> (Vec<f64>, Vec<f64>) {
    sample.chunks_exact(2).map(|c| (c[0], c[1])).unzip()
}

/// Inverse of [`split_sample`].
pub fn interleave(means: &[f64], scales: &[f64]) -> Result<Vec<f64>> {
    if means.len() != scales.len() {
        return Err(Error::DimensionMismatch {
            expected: means.len(),
            actual: scales.len(),
            context: "means vs scales",
        });
    }
    Ok(means.iter().zip(scales).flat_map(|(&m, &b)| [m, b]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodName {
    Abc,
    In,
    Gmm,
    Rgmm,
}

impl LikelihoodName {
    pub const ALL: [LikelihoodName; 4] = [
        LikelihoodName::Abc,
        LikelihoodName::In,
        LikelihoodName::Gmm,
        LikelihoodName::Rgmm,
    ];
}

/// Likelihood section of a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodConfig {
    pub kind: LikelihoodName,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub centering: VarianceCentering,
}

pub(crate) fn default_epsilon() -> f64 {
    0.05
}

pub(crate) fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl LikelihoodConfig {
    pub fn kind(&self) -> LikelihoodKind {
        to_kind(self.kind, self.epsilon, self.gamma)
    }
}

pub fn to_kind(name: LikelihoodName, epsilon: f64, gamma: f64) -> LikelihoodKind {
    match name {
        LikelihoodName::Abc => LikelihoodKind::Abc { epsilon, gamma },
        LikelihoodName::In => LikelihoodKind::IndependentNormal,
        LikelihoodName::Gmm => LikelihoodKind::Gmm,
        LikelihoodName::Rgmm => LikelihoodKind::Rgmm,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationsConfig {
    pub path: Option<PathBuf>,
}

/// Problem definition as written in a TOML file.
///
/// ```toml
/// noise_std = 0.01
///
/// [[parameters]]
/// name = "t"
/// mean_prior = { kind = "normal", mean = 4.5, std = 0.5 }
/// scale_prior = { kind = "log_normal", log_mean = -1.0, log_std = 0.5 }
///
/// [likelihood]
/// kind = "abc"
/// epsilon = 0.05
///
/// [observations]
/// path = "linear.csv"
///
/// [pce]
/// degree = 1
/// order = 2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    #[serde(default)]
    pub parameters: Vec<EmbeddedParameter>,
    #[serde(default)]
    pub plain_parameters: Vec<PlainParameter>,
    pub likelihood: LikelihoodConfig,
    #[serde(default)]
    pub observations: ObservationsConfig,
    pub noise_std: f64,
    #[serde(default)]
    pub pce: PceSettings,
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in &cfg.parameters {
            p.validate()?;
        }
        for p in &cfg.plain_parameters {
            p.prior.validated()?;
        }
        cfg.likelihood.kind().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Reads the `x,y` observation file, resolving relative paths against
    /// `base_dir`.
    pub fn load_observations(&self, base_dir: &Path) -> Result<ObservationSet> {
        let path = self
            .observations
            .path
            .as_ref()
            .ok_or_else(|| Error::Config("observations.path is not set".into()))?;
        let path = if path.is_absolute() {
            path.clone()
        } else {
            base_dir.join(path)
        };
        ObservationSet::read_csv(&path, self.noise_std)
    }

    pub fn build(&self, forward: Arc<dyn ForwardModel>, observations: ObservationSet) -> Result<InferenceProblem> {
        let observations = ObservationSet {
            noise_std: self.noise_std,
            ..observations
        };
        Ok(InferenceProblem::new(
            self.parameters.clone(),
            self.plain_parameters.clone(),
            forward,
            observations,
            self.likelihood.kind(),
            self.pce,
        )?
        .with_centering(self.likelihood.centering))
    }
}
