use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ObservationSet;

const STREAM_SLOPE: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Systematic modification applied on top of the base data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearVariant {
    #[default]
    None,
    /// `y += Δy` everywhere.
    Offset { delta: f64 },
    /// `y −= Δy` for `x ∈ [x_low, x_high]`.
    Outliers {
        delta: f64,
        #[serde(default = "default_outlier_low")]
        x_low: f64,
        #[serde(default = "default_outlier_high")]
        x_high: f64,
    },
}

fn default_outlier_low() -> f64 {
    0.6
}

fn default_outlier_high() -> f64 {
    0.7
}

impl LinearVariant {
    pub fn outliers(delta: f64) -> Self {
        LinearVariant::Outliers {
            delta,
            x_low: default_outlier_low(),
            x_high: default_outlier_high(),
        }
    }
}

/// `yᵢ = θᵢ·xᵢ + εᵢ` with a fresh slope `θᵢ ~ N(θ_mean, θ_std²)` per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearGenSpec {
    pub n_points: usize,
    pub x_low: f64,
    pub x_high: f64,
    pub slope_mean: f64,
    pub slope_std: f64,
    pub noise_std: f64,
    pub variant: LinearVariant,
    pub seed: u64,
}

impl Default for LinearGenSpec {
    fn default() -> Self {
        Self {
            n_points: 120,
            x_low: 0.4,
            x_high: 1.0,
            slope_mean: 4.0,
            slope_std: 1.0,
            noise_std: 0.01,
            variant: LinearVariant::None,
            seed: 1,
        }
    }
}

impl LinearGenSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_points;
        if n == 1 {
            return vec![self.x_low];
        }
        (0..n)
            .map(|i| self.x_low + (self.x_high - self.x_low) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Generates the data set. The returned `noise_std` is the generator noise;
/// callers prescribing a different σ_N overwrite it.
///
/// Slopes and noise come from separate random streams, so every variant
/// shares the same base draws for a given seed.
pub fn generate_linear(spec: &LinearGenSpec) -> Result<ObservationSet> {
    if spec.n_points == 0 || !(spec.x_low <= spec.x_high) || !(spec.slope_std >= 0.0) || !(spec.noise_std >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid linear generator spec {spec:?}"
        )));
    }
    let x = spec.grid();
    let mut slope_rng = ChaCha20Rng::seed_from_u64(spec.seed);
    slope_rng.set_stream(STREAM_SLOPE);
    let mut noise_rng = ChaCha20Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(STREAM_NOISE);
    let y = x
        .iter()
        .map(|&xi| {
            let z: f64 = StandardNormal.sample(&mut slope_rng);
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            let theta = spec.slope_mean + spec.slope_std * z;
            let shift = match spec.variant {
                LinearVariant::None => 0.0,
                LinearVariant::Offset { delta } => delta,
                LinearVariant::Outliers { delta, x_low, x_high } => {
                    if in_closed(xi, x_low, x_high) {
                        -delta
                    } else {
                        0.0
                    }
                }
            };
            theta * xi + shift + spec.noise_std * e
        })
        .collect();
    ObservationSet::new(x, y, spec.noise_std)
}

/// Closed interval test with a relative tolerance, so grid points landing
/// on an edge up to rounding are included.
pub(crate) fn in_closed(x: f64, lo: f64, hi: f64) -> bool {
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    x >= lo - tol && x <= hi + tol
}
