//! Synthetic data: the scattered-slope linear data set with its variants,
//! and the reinforced-section heating experiment.

mod linear;
mod thermal;

pub use linear::{generate_linear, LinearGenSpec, LinearVariant};
pub use thermal::{
    external_temperature_series, generate_thermal, steel_fraction, voigt_mix, ExternalNoise, SensorData,
    ThermalDataset, ThermalGenSpec, ThermalTruth, TimeWindow,
};
