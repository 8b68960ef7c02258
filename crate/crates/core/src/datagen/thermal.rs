use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::thermal::{defaults, ramp_value};
use crate::models::{
    cumulative_heat, midline_heat_rate, sensor_temperatures, solve_transient, ExternalTemperature, Material,
    MaterialMap, Mesh, SensorLayout, ThermalModel,
};
use crate::problem::{csv_io, parse_field, ObservationSet};

const STREAM_SHORT: u64 = 11;
const STREAM_LONG: u64 = 12;
const STREAM_OUTPUT_TRAIN: u64 = 21;
const STREAM_OUTPUT_TEST: u64 = 22;

/// Property-wise Voigt mix `f·M_steel + (1−f)·M_concrete`.
pub fn voigt_mix(f_steel: f64, steel: &Material, concrete: &Material) -> Result<Material> {
    if !(0.0..=1.0).contains(&f_steel) {
        return Err(Error::InvalidArgument(format!(
            "steel fraction {f_steel} outside [0, 1]"
        )));
    }
    Ok(concrete.mix(steel, f_steel))
}

/// Area fraction of one round bar of diameter `d` in a cell of area `a`.
pub fn steel_fraction(bar_diameter_m: f64, cell_area_m2: f64) -> f64 {
    bar_diameter_m * bar_diameter_m * 0.25 * std::f64::consts::PI / cell_area_m2
}

/// Fluctuations added to the held external temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalNoise {
    /// Independent per-step component, K.
    pub short_std: f64,
    /// Slowly varying component: fresh draws every `knot_every` steps,
    /// linearly interpolated in between, K.
    pub long_std: f64,
    pub knot_every: usize,
}

impl Default for ExternalNoise {
    fn default() -> Self {
        Self {
            short_std: 1.0,
            long_std: 10.0,
            knot_every: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_min: f64,
    pub end_min: f64,
}

impl TimeWindow {
    pub fn sample_times_min(&self, cadence_min: f64) -> Vec<f64> {
        let n = ((self.end_min - self.start_min) / cadence_min + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start_min + i as f64 * cadence_min).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalGenSpec {
    pub mesh_elements: usize,
    pub concrete: Material,
    pub steel: Material,
    /// Steel area fraction of the reinforcement band. The default is the
    /// bar geometry (one 12 mm bar per 0.0004 m²) rounded to three digits.
    pub steel_fraction: f64,
    pub band_y_m: (f64, f64),
    pub initial_temperature_k: f64,
    pub hold_temperature_k: f64,
    pub ramp_min: f64,
    pub time_step_s: f64,
    pub noise: ExternalNoise,
    pub output_noise_std: f64,
    pub training: TimeWindow,
    pub testing: TimeWindow,
    pub cadence_min: f64,
    pub horizon_min: f64,
    pub sensors: SensorLayout,
    pub midline_x_m: f64,
    pub depth_m: f64,
    pub seed: u64,
}

impl Default for ThermalGenSpec {
    fn default() -> Self {
        Self {
            mesh_elements: defaults::MESH_ELEMENTS,
            concrete: defaults::CONCRETE,
            steel: defaults::STEEL,
            steel_fraction: 0.283,
            band_y_m: defaults::BAND_Y_M,
            initial_temperature_k: defaults::INITIAL_TEMPERATURE_K,
            hold_temperature_k: defaults::HOLD_TEMPERATURE_K,
            ramp_min: defaults::RAMP_DURATION_S / 60.0,
            time_step_s: defaults::TIME_STEP_S,
            noise: ExternalNoise::default(),
            output_noise_std: 0.2,
            training: TimeWindow {
                start_min: 20.0,
                end_min: 220.0,
            },
            testing: TimeWindow {
                start_min: 20.0,
                end_min: 270.0,
            },
            cadence_min: 5.0,
            horizon_min: 5000.0,
            sensors: SensorLayout::default(),
            midline_x_m: defaults::MIDLINE_X_M,
            depth_m: defaults::DEPTH_M,
            seed: 1,
        }
    }
}

impl ThermalGenSpec {
    pub fn horizon_steps(&self) -> Result<usize> {
        whole_steps(self.horizon_min * 60.0, self.time_step_s)
    }

    pub fn reinforcement(&self) -> Result<Material> {
        voigt_mix(self.steel_fraction, &self.steel, &self.concrete)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::square(self.mesh_elements)
    }

    /// Noise-free right-edge temperature (ramp, then hold) over `n_steps`
    /// steps. This is what the calibration models assume.
    pub fn nominal_external(&self, n_steps: usize) -> Result<ExternalTemperature> {
        ExternalTemperature::ramp(
            n_steps,
            self.time_step_s,
            self.initial_temperature_k,
            self.hold_temperature_k,
            self.ramp_min * 60.0,
        )
    }

    /// Seed of the independent testing run.
    pub fn testing_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }
}

fn whole_steps(duration_s: f64, dt_s: f64) -> Result<usize> {
    let r = duration_s / dt_s;
    if !(r >= 0.0) || (r - r.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "{duration_s} s is not a multiple of the time step {dt_s} s"
        )));
    }
    Ok(r.round() as usize)
}

/// Right-edge temperature over the full horizon: a linear ramp to the hold
/// value, then `hold + s + l` from the first step at or after the end of
/// the ramp, with `s` i.i.d. per step and `l` piecewise linear through
/// fresh draws every `knot_every` steps starting at that step.
pub fn external_temperature_series(spec: &ThermalGenSpec, seed: u64) -> Result<ExternalTemperature> {
    let n_steps = spec.horizon_steps()?;
    let dt = spec.time_step_s;
    let ramp_s = spec.ramp_min * 60.0;
    if spec.noise.knot_every == 0 {
        return Err(Error::InvalidArgument("knot spacing must be positive".into()));
    }
    let first = (0..=n_steps)
        .find(|&k| k as f64 * dt >= ramp_s - 1e-9)
        .unwrap_or(n_steps + 1);
    let mut short_rng = ChaCha20Rng::seed_from_u64(seed);
    short_rng.set_stream(STREAM_SHORT);
    let mut long_rng = ChaCha20Rng::seed_from_u64(seed);
    long_rng.set_stream(STREAM_LONG);

    let every = spec.noise.knot_every;
    let n_noisy = (n_steps + 1).saturating_sub(first);
    let n_knots = n_noisy.div_ceil(every) + 1;
    let knots: Vec<f64> = (0..n_knots)
        .map(|_| spec.noise.long_std * normal(&mut long_rng))
        .collect();

    let values = (0..=n_steps)
        .map(|k| {
            let t = k as f64 * dt;
            if k < first {
                return ramp_value(t, spec.initial_temperature_k, spec.hold_temperature_k, ramp_s);
            }
            let s: f64 = spec.noise.short_std * normal(&mut short_rng);
            let j = (k - first) / every;
            let w = ((k - first) % every) as f64 / every as f64;
            let l = (1.0 - w) * knots[j] + w * knots[j + 1];
            spec.hold_temperature_k + s + l
        })
        .collect();
    ExternalTemperature::from_values(dt, values)
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Sensor readings on a regular time grid, stored sensor-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorData {
    pub times_min: Vec<f64>,
    pub n_sensors: usize,
    pub values: Vec<f64>,
    pub noise_std: f64,
}

impl SensorData {
    pub fn value(&self, sensor: usize, time: usize) -> f64 {
        self.values[sensor * self.times_min.len() + time]
    }

    /// Observation set with `x` = time in minutes, in the same order as the
    /// sensor model outputs.
    pub fn observations(&self) -> Result<ObservationSet> {
        let x = (0..self.n_sensors)
            .flat_map(|_| self.times_min.iter().copied())
            .collect();
        ObservationSet::new(x, self.values.clone(), self.noise_std)
    }

    pub fn times_s(&self) -> Vec<f64> {
        self.times_min.iter().map(|t| t * 60.0).collect()
    }

    /// CSV with columns `time_min,sensor,value`; sensors are numbered from 1.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["time_min", "sensor", "value"])?;
        for s in 0..self.n_sensors {
            for (i, t) in self.times_min.iter().enumerate() {
                w.write_record([t.to_string(), (s + 1).to_string(), format!("{:.17e}", self.value(s, i))])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, noise_std: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut by_sensor: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let t = parse_field(&record, 0, path)?;
            let s = parse_field(&record, 1, path)? as usize;
            let v = parse_field(&record, 2, path)?;
            by_sensor.entry(s).or_default().push((t, v));
        }
        let mut times: Option<Vec<f64>> = None;
        let mut values = Vec::new();
        for (_, mut rows) in by_sensor.iter().map(|(k, v)| (k, v.clone())) {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
            match &times {
                None => times = Some(t),
                Some(prev) if *prev != t => {
                    return Err(Error::Config(format!(
                        "{}: sensors have different time grids",
                        path.display()
                    )))
                }
                _ => {}
            }
            values.extend(rows.iter().map(|r| r.1));
        }
        let times_min = times.ok_or_else(|| Error::Config(format!("{}: no rows", path.display())))?;
        Ok(Self {
            times_min,
            n_sensors: by_sensor.len(),
            values,
            noise_std,
        })
    }
}

/// Noise-free quantities kept alongside a generated thermal data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalTruth {
    pub seed: u64,
    pub testing_seed: u64,
    pub steel_fraction: f64,
    pub reinforcement: Material,
    pub time_step_s: f64,
    /// Right-edge temperature of the training run, one value per step.
    pub training_external: Vec<f64>,
    /// Right-edge temperature of the testing run over the full horizon.
    pub testing_external: Vec<f64>,
    pub training_clean: Vec<f64>,
    pub testing_clean: Vec<f64>,
    /// Heat that has entered the insulated half through the midline during
    /// the testing run, J for the configured depth, at every step.
    pub heat_j: Vec<f64>,
}

impl ThermalTruth {
    pub fn final_heat_j(&self) -> f64 {
        *self.heat_j.last().unwrap_or(&0.0)
    }

    pub fn training_external(&self) -> Result<ExternalTemperature> {
        ExternalTemperature::from_values(self.time_step_s, self.training_external.clone())
    }

    pub fn testing_external(&self) -> Result<ExternalTemperature> {
        ExternalTemperature::from_values(self.time_step_s, self.testing_external.clone())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDataset {
    pub training: SensorData,
    pub testing: SensorData,
    pub truth: ThermalTruth,
}

fn sample_run(
    spec: &ThermalGenSpec,
    model: &ThermalModel,
    window: &TimeWindow,
    horizon_s: f64,
    noise_seed: u64,
    stream: u64,
) -> Result<(SensorData, Vec<f64>, Vec<f64>)> {
    let history = solve_transient(model, horizon_s)?;
    let times_min = window.sample_times_min(spec.cadence_min);
    let times_s: Vec<f64> = times_min.iter().map(|t| t * 60.0).collect();
    let rows = sensor_temperatures(&history, &spec.sensors, &times_s)?;
    let n_s = spec.sensors.len();
    let clean: Vec<f64> = (0..n_s).flat_map(|s| rows.iter().map(move |r| r[s])).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(noise_seed);
    rng.set_stream(stream);
    let noisy = clean
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + spec.output_noise_std * e
        })
        .collect();
    let rate = midline_heat_rate(&history, spec.midline_x_m)?;
    let heat = cumulative_heat(&rate, &history.times_s())?
        .into_iter()
        .map(|q| -q * spec.depth_m)
        .collect();
    Ok((
        SensorData {
            times_min,
            n_sensors: n_s,
            values: noisy,
            noise_std: spec.output_noise_std,
        },
        clean,
        heat,
    ))
}

/// Runs the reinforced generator twice with independent external series:
/// once for the training window and once, over the full horizon, for the
/// testing window and the reference cumulative heat.
pub fn generate_thermal(spec: &ThermalGenSpec) -> Result<ThermalDataset> {
    let mesh = spec.mesh()?;
    let (lo, hi) = spec.band_y_m;
    let map = MaterialMap::with_band(mesh, spec.concrete, spec.reinforcement()?, lo, hi)?;
    if spec.training.end_min > spec.horizon_min || spec.testing.end_min > spec.horizon_min {
        return Err(Error::InvalidArgument("sampling window beyond the horizon".into()));
    }

    let train_ext = external_temperature_series(spec, spec.seed)?;
    let train_steps = whole_steps(spec.training.end_min * 60.0, spec.time_step_s)?;
    let train_ext = train_ext.truncated(train_steps)?;
    let mut train_model = ThermalModel::new(map.clone(), train_ext.clone());
    train_model.initial_temperature = spec.initial_temperature_k;
    let (training, training_clean, _) = sample_run(
        spec,
        &train_model,
        &spec.training,
        train_steps as f64 * spec.time_step_s,
        spec.seed,
        STREAM_OUTPUT_TRAIN,
    )?;

    let test_seed = spec.testing_seed();
    let test_ext = external_temperature_series(spec, test_seed)?;
    let mut test_model = ThermalModel::new(map, test_ext.clone());
    test_model.initial_temperature = spec.initial_temperature_k;
    let (testing, testing_clean, heat_j) = sample_run(
        spec,
        &test_model,
        &spec.testing,
        spec.horizon_steps()? as f64 * spec.time_step_s,
        test_seed,
        STREAM_OUTPUT_TEST,
    )?;

    Ok(ThermalDataset {
        training,
        testing,
        truth: ThermalTruth {
            seed: spec.seed,
            testing_seed: test_seed,
            steel_fraction: spec.steel_fraction,
            reinforcement: spec.reinforcement()?,
            time_step_s: spec.time_step_s,
            training_external: train_ext.values().to_vec(),
            testing_external: test_ext.values().to_vec(),
            training_clean,
            testing_clean,
            heat_j,
        },
    })
}
