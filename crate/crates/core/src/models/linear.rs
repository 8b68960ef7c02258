use crate::error::{Error, Result};
use crate::models::ForwardModel;

/// `y = θ·x` evaluated at a fixed set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    x: Vec<f64>,
}

impl LinearModel {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite evaluation point".into()));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
}

impl ForwardModel for LinearModel {
    fn n_params(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        self.x.len()
    }

    fn evaluate(&self, params: &[f64]) -> Result<Vec<f64>> {
        let theta = params[0];
        Ok(self.x.iter().map(|x| theta * x).collect())
    }
}

/// Closed-form moments of `θ̃·x` with `θ̃ ~ N(t, σ_b²)`: mean `t·x`, model-only
/// standard deviation `σ_b·|x|`.
pub fn linear_eval(t: f64, sigma_b: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma_b >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_b must be >= 0, got {sigma_b}")));
    }
    Ok(x.iter().map(|&xi| (t * xi, sigma_b * xi.abs())).unzip())
}
