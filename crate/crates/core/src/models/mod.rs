//! Forward models: the closed-form linear model and the 2-D transient
//! heat-conduction model with its derived quantities.

mod linear;
pub mod thermal;

pub use linear::{linear_eval, LinearModel};
pub use thermal::{
    cumulative_heat, field_midline_heat_rate, field_sensor_values, midline_heat_rate, sensor_temperatures,
    solve_transient, thermal_forward, CumulativeHeatModel, ExternalTemperature, Material, MaterialMap, Mesh,
    SensorLayout, TemperatureHistory, ThermalModel, ThermalSensorModel,
};

use crate::error::Result;

/// A deterministic map from a parameter vector to a vector of outputs.
///
/// Implementations must be pure: the same input always produces the same
/// output and evaluation does not mutate shared state, so quadrature nodes and
/// walkers may be evaluated concurrently.
pub trait ForwardModel: Send + Sync {
    fn n_params(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn evaluate(&self, params: &[f64]) -> Result<Vec<f64>>;
}
