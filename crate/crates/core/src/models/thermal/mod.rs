//! Two-dimensional transient heat conduction on a square cross-section.
//!
//! Bilinear quadrilaterals on a structured grid, consistent mass, backward
//! Euler in time. The right edge carries a prescribed temperature history;
//! the other edges are insulated. Nodes are numbered row by row
//! (`id = j·(nx+1) + i`), which gives a half-bandwidth of `nx + 2`.

mod banded;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use self::banded::{BandedCholesky, BandedSym};
use crate::error::{Error, Result};
use crate::models::ForwardModel;

/// Default physical setup.
pub mod defaults {
    use super::Material;

    pub const DOMAIN_SIZE_M: f64 = 0.4;
    pub const MESH_ELEMENTS: usize = 20;
    pub const TIME_STEP_S: f64 = 300.0;
    pub const INITIAL_TEMPERATURE_K: f64 = 273.0;
    pub const HOLD_TEMPERATURE_K: f64 = 303.0;
    pub const RAMP_DURATION_S: f64 = 29.0 * 60.0;
    pub const MIDLINE_X_M: f64 = 0.2;
    /// Slab thickness used to turn per-depth heat into joules.
    pub const DEPTH_M: f64 = 0.02;
    pub const CONCRETE: Material = Material {
        density: 2300.0,
        heat_capacity: 900.0,
        diffusivity: 9.66e-7,
    };
    pub const STEEL: Material = Material {
        density: 7850.0,
        heat_capacity: 440.0,
        diffusivity: 1.56e-5,
    };
    pub const BAND_Y_M: (f64, f64) = (0.16, 0.18);
    pub const SENSORS_M: [(f64, f64); 4] = [(0.15, 0.30), (0.30, 0.30), (0.15, 0.12), (0.30, 0.12)];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// kg/m³
    pub density: f64,
    /// J/(kg·K)
    pub heat_capacity: f64,
    /// m²/s
    pub diffusivity: f64,
}

impl Material {
    pub fn new(density: f64, heat_capacity: f64, diffusivity: f64) -> Result<Self> {
        let m = Self {
            density,
            heat_capacity,
            diffusivity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("density", self.density),
            ("heat capacity", self.heat_capacity),
            ("diffusivity", self.diffusivity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Model(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.heat_capacity
    }

    /// k = α·ρ·c_p
    pub fn conductivity(&self) -> f64 {
        self.diffusivity * self.density * self.heat_capacity
    }

    /// Property-wise arithmetic mix `f·other + (1−f)·self`.
    pub fn mix(&self, other: &Material, f: f64) -> Material {
        Material {
            density: f * other.density + (1.0 - f) * self.density,
            heat_capacity: f * other.heat_capacity + (1.0 - f) * self.heat_capacity,
            diffusivity: f * other.diffusivity + (1.0 - f) * self.diffusivity,
        }
    }
}

/// Structured grid of `nx × ny` rectangles on `[0,lx] × [0,ly]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::Model(format!("invalid mesh {nx}x{ny} on {lx}x{ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square mesh with `n × n` elements on the default domain.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, defaults::DOMAIN_SIZE_M, defaults::DOMAIN_SIZE_M)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_coords(&self, id: usize) -> (f64, f64) {
        let i = id % (self.nx + 1);
        let j = id / (self.nx + 1);
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    /// Global node ids of element `(ei, ej)`, counter-clockwise from the
    /// lower-left corner.
    pub fn element_nodes(&self, ei: usize, ej: usize) -> [usize; 4] {
        [
            self.node(ei, ej),
            self.node(ei + 1, ej),
            self.node(ei + 1, ej + 1),
            self.node(ei, ej + 1),
        ]
    }

    pub fn half_bandwidth(&self) -> usize {
        self.nx + 2
    }

    /// Containing element and local coordinates `(s, t) ∈ [0,1]²`.
    pub fn locate(&self, x: f64, y: f64) -> Result<(usize, usize, f64, f64)> {
        let tol = 1e-12 * self.lx.max(self.ly);
        if !(x >= -tol && x <= self.lx + tol && y >= -tol && y <= self.ly + tol) {
            return Err(Error::Model(format!("point ({x}, {y}) outside the domain")));
        }
        let (ei, s) = cell(x, self.hx(), self.nx);
        let (ej, t) = cell(y, self.hy(), self.ny);
        Ok((ei, ej, s, t))
    }
}

fn cell(x: f64, h: f64, n: usize) -> (usize, f64) {
    let u = (x / h).max(0.0);
    let i = (u.floor() as usize).min(n - 1);
    (i, (u - i as f64).clamp(0.0, 1.0))
}

/// Per-element material assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialMap {
    mesh: Mesh,
    elements: Vec<Material>,
}

impl MaterialMap {
    pub fn uniform(mesh: Mesh, material: Material) -> Result<Self> {
        material.validate()?;
        Ok(Self {
            mesh,
            elements: vec![material; mesh.n_elements()],
        })
    }

    /// `base` everywhere except a horizontal band `y ∈ [y_lo, y_hi]` filled
    /// with `band`; elements cut by the band edge get a property-wise mix
    /// weighted by the covered fraction of their height.
    pub fn with_band(mesh: Mesh, base: Material, band: Material, y_lo: f64, y_hi: f64) -> Result<Self> {
        base.validate()?;
        band.validate()?;
        if !(y_lo < y_hi) {
            return Err(Error::Model(format!("empty band [{y_lo}, {y_hi}]")));
        }
        let hy = mesh.hy();
        let mut elements = Vec::with_capacity(mesh.n_elements());
        for ej in 0..mesh.ny {
            let (a, b) = (ej as f64 * hy, (ej + 1) as f64 * hy);
            let overlap = ((b.min(y_hi) - a.max(y_lo)) / hy).clamp(0.0, 1.0);
            let overlap = if (1.0 - overlap).abs() < 1e-9 {
                1.0
            } else if overlap < 1e-9 {
                0.0
            } else {
                overlap
            };
            let m = base.mix(&band, overlap);
            elements.extend(std::iter::repeat_n(m, mesh.nx));
        }
        Ok(Self { mesh, elements })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn element(&self, ei: usize, ej: usize) -> &Material {
        &self.elements[ej * self.mesh.nx + ei]
    }

    pub fn elements(&self) -> &[Material] {
        &self.elements
    }
}

/// Right-edge temperature at every time step, `values[k]` at `t = k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTemperature {
    dt_s: f64,
    values: Vec<f64>,
}

impl ExternalTemperature {
    pub fn from_values(dt_s: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt_s > 0.0) || values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("invalid external temperature series".into()));
        }
        Ok(Self { dt_s, values })
    }

    pub fn constant(n_steps: usize, dt_s: f64, value: f64) -> Result<Self> {
        Self::from_values(dt_s, vec![value; n_steps + 1])
    }

    /// Linear rise from `start` to `hold` over `ramp_s`, then constant.
    pub fn ramp(n_steps: usize, dt_s: f64, start: f64, hold: f64, ramp_s: f64) -> Result<Self> {
        let values = (0..=n_steps)
            .map(|k| ramp_value(k as f64 * dt_s, start, hold, ramp_s))
            .collect();
        Self::from_values(dt_s, values)
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_step(&self, k: usize) -> Result<f64> {
        self.values.get(k).copied().ok_or_else(|| {
            Error::Model(format!(
                "external temperature has {} steps, step {k} requested",
                self.n_steps()
            ))
        })
    }

    pub fn truncated(&self, n_steps: usize) -> Result<Self> {
        if n_steps > self.n_steps() {
            return Err(Error::Model(format!(
                "cannot truncate {} steps to {n_steps}",
                self.n_steps()
            )));
        }
        Ok(Self {
            dt_s: self.dt_s,
            values: self.values[..=n_steps].to_vec(),
        })
    }
}

pub(crate) fn ramp_value(t_s: f64, start: f64, hold: f64, ramp_s: f64) -> f64 {
    if ramp_s <= 0.0 {
        return hold;
    }
    start + (hold - start) * (t_s / ramp_s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub points: Vec<(f64, f64)>,
}

impl Default for SensorLayout {
    fn default() -> Self {
        Self {
            points: defaults::SENSORS_M.to_vec(),
        }
    }
}

impl SensorLayout {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalModel {
    pub materials: MaterialMap,
    pub dt_s: f64,
    pub initial_temperature: f64,
    pub external: ExternalTemperature,
}

impl ThermalModel {
    pub fn new(materials: MaterialMap, external: ExternalTemperature) -> Self {
        let dt_s = external.dt_s();
        Self {
            materials,
            dt_s,
            initial_temperature: defaults::INITIAL_TEMPERATURE_K,
            external,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        self.materials.mesh()
    }
}

/// Unit element matrices ∫N_aN_b and ∫∇N_a·∇N_b on an `hx × hy` rectangle,
/// by 2×2 Gauss quadrature.
fn unit_element_matrices(hx: f64, hy: f64) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let g = 0.5 / 3f64.sqrt();
    let pts = [0.5 - g, 0.5 + g];
    let jac = hx * hy * 0.25;
    let mut me = [[0.0; 4]; 4];
    let mut ke = [[0.0; 4]; 4];
    for &s in &pts {
        for &t in &pts {
            let n = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
            let dx = [-(1.0 - t) / hx, (1.0 - t) / hx, t / hx, -t / hx];
            let dy = [-(1.0 - s) / hy, -s / hy, s / hy, (1.0 - s) / hy];
            for a in 0..4 {
                for b in 0..4 {
                    me[a][b] += n[a] * n[b] * jac;
                    ke[a][b] += (dx[a] * dx[b] + dy[a] * dy[b]) * jac;
                }
            }
        }
    }
    (me, ke)
}

/// Factored step operator for one material map.
struct Stepper {
    mesh: Mesh,
    dt_s: f64,
    mass: BandedSym,
    system: BandedSym,
    factor: BandedCholesky,
    dirichlet: Vec<usize>,
}

impl Stepper {
    fn new(materials: &MaterialMap, dt_s: f64) -> Result<Self> {
        if !(dt_s > 0.0) {
            return Err(Error::Model(format!("time step must be positive, got {dt_s}")));
        }
        let mesh = *materials.mesh();
        let (me, ke) = unit_element_matrices(mesh.hx(), mesh.hy());
        let bw = mesh.half_bandwidth();
        let mut mass = BandedSym::zeros(mesh.n_nodes(), bw);
        let mut system = BandedSym::zeros(mesh.n_nodes(), bw);
        for ej in 0..mesh.ny {
            for ei in 0..mesh.nx {
                let mat = materials.element(ei, ej);
                let (c, k) = (mat.volumetric_heat_capacity(), mat.conductivity());
                let nodes = mesh.element_nodes(ei, ej);
                for a in 0..4 {
                    for b in 0..4 {
                        let (ga, gb) = (nodes[a], nodes[b]);
                        if ga >= gb {
                            let m = c * me[a][b];
                            mass.add(ga, gb, m);
                            system.add(ga, gb, m + dt_s * k * ke[a][b]);
                        }
                    }
                }
            }
        }
        let dirichlet: Vec<usize> = (0..=mesh.ny).map(|j| mesh.node(mesh.nx, j)).collect();
        let mut reduced = system.clone();
        for &d in &dirichlet {
            reduced.make_identity_row(d);
        }
        let factor = reduced.cholesky()?;
        Ok(Self {
            mesh,
            dt_s,
            mass,
            system,
            factor,
            dirichlet,
        })
    }

    /// Advances `field` one step with boundary value `t_ext`; returns the
    /// heat rate entering through the Dirichlet edge (W per unit depth).
    fn step(&self, field: &mut [f64], t_ext: f64, work: &mut StepWork) -> f64 {
        let n = self.mesh.n_nodes();
        self.mass.mul_vec(field, &mut work.m_old);
        work.lift.iter_mut().for_each(|v| *v = 0.0);
        for &d in &self.dirichlet {
            work.lift[d] = t_ext;
        }
        self.system.mul_vec(&work.lift, &mut work.a_lift);
        for i in 0..n {
            work.rhs[i] = work.m_old[i] - work.a_lift[i];
        }
        for &d in &self.dirichlet {
            work.rhs[d] = t_ext;
        }
        self.factor.solve_in_place(&mut work.rhs);
        field.copy_from_slice(&work.rhs);
        self.system.mul_vec(field, &mut work.a_lift);
        self.dirichlet
            .iter()
            .map(|&d| (work.a_lift[d] - work.m_old[d]) / self.dt_s)
            .sum()
    }
}

struct StepWork {
    m_old: Vec<f64>,
    lift: Vec<f64>,
    a_lift: Vec<f64>,
    rhs: Vec<f64>,
}

impl StepWork {
    fn new(n: usize) -> Self {
        Self {
            m_old: vec![0.0; n],
            lift: vec![0.0; n],
            a_lift: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }
}

/// Runs `n_steps` backward-Euler steps, calling `observe(step, field,
/// boundary_rate)` on the initial field (rate 0) and after every step.
fn march(model: &ThermalModel, n_steps: usize, mut observe: impl FnMut(usize, &[f64], f64)) -> Result<()> {
    if n_steps > model.external.n_steps() {
        return Err(Error::Model(format!(
            "external temperature covers {} steps, {n_steps} requested",
            model.external.n_steps()
        )));
    }
    if (model.external.dt_s() - model.dt_s).abs() > 1e-9 * model.dt_s {
        return Err(Error::Model("external series time step differs from the solver".into()));
    }
    let stepper = Stepper::new(&model.materials, model.dt_s)?;
    let n = model.mesh().n_nodes();
    let mut field = vec![model.initial_temperature; n];
    let mut work = StepWork::new(n);
    observe(0, &field, 0.0);
    for k in 1..=n_steps {
        let rate = stepper.step(&mut field, model.external.at_step(k)?, &mut work);
        observe(k, &field, rate);
    }
    Ok(())
}

/// Nodal temperature fields at every step together with what is needed for
/// post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureHistory {
    mesh: Mesh,
    dt_s: f64,
    fields: Vec<Vec<f64>>,
    conductivity: Vec<f64>,
    heat_capacity: Vec<f64>,
    boundary_rate: Vec<f64>,
}

impl TemperatureHistory {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn times_s(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|k| k as f64 * self.dt_s).collect()
    }

    pub fn field(&self, step: usize) -> &[f64] {
        &self.fields[step]
    }

    /// Heat rate entering through the prescribed-temperature edge at each
    /// step, W per unit depth (0 at the initial step).
    pub fn boundary_heat_rate(&self) -> &[f64] {
        &self.boundary_rate
    }

    /// ∫ ρc_p T dA over `x ≤ x_cut`, J per unit depth.
    pub fn stored_energy(&self, step: usize, x_cut: f64) -> f64 {
        stored_energy(&self.mesh, &self.heat_capacity, &self.fields[step], x_cut)
    }

    /// Nodal field at `step` as CSV with columns `x_m,y_m,temperature_k`.
    pub fn write_field_csv(&self, path: &Path, step: usize) -> Result<()> {
        let field = self
            .fields
            .get(step)
            .ok_or_else(|| Error::InvalidArgument(format!("step {step} beyond history")))?;
        let mut text = String::from("x_m,y_m,temperature_k\n");
        for (id, t) in field.iter().enumerate() {
            let (x, y) = self.mesh.node_coords(id);
            text.push_str(&format!("{x},{y},{t}\n"));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn stored_energy(mesh: &Mesh, heat_capacity: &[f64], field: &[f64], x_cut: f64) -> f64 {
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let mut total = 0.0;
    for ej in 0..mesh.ny {
        for ei in 0..mesh.nx {
            let x0 = ei as f64 * hx;
            let sc = ((x_cut - x0) / hx).clamp(0.0, 1.0);
            if sc == 0.0 {
                continue;
            }
            let nodes = mesh.element_nodes(ei, ej);
            // ∫₀^sc (1−s) ds and ∫₀^sc s ds, times ∫₀¹ (1−t) dt = ∫₀¹ t dt = ½
            let left = (sc - 0.5 * sc * sc) * 0.5;
            let right = 0.5 * sc * sc * 0.5;
            let w = [left, right, right, left];
            let integral: f64 = nodes.iter().zip(w).map(|(&n, w)| field[n] * w).sum();
            total += heat_capacity[ej * mesh.nx + ei] * integral * hx * hy;
        }
    }
    total
}

/// Solves the transient problem over `horizon_s`, which must be a whole
/// number of time steps.
pub fn solve_transient(model: &ThermalModel, horizon_s: f64) -> Result<TemperatureHistory> {
    let n_steps = steps_in(horizon_s, model.dt_s)?;
    let mut fields = Vec::with_capacity(n_steps + 1);
    let mut boundary_rate = Vec::with_capacity(n_steps + 1);
    march(model, n_steps, |_, f, r| {
        fields.push(f.to_vec());
        boundary_rate.push(r);
    })?;
    let mats = model.materials.elements();
    Ok(TemperatureHistory {
        mesh: *model.mesh(),
        dt_s: model.dt_s,
        fields,
        conductivity: mats.iter().map(Material::conductivity).collect(),
        heat_capacity: mats.iter().map(Material::volumetric_heat_capacity).collect(),
        boundary_rate,
    })
}

fn steps_in(duration_s: f64, dt_s: f64) -> Result<usize> {
    let r = duration_s / dt_s;
    if !(r >= 0.0) || (r - r.round()).abs() > 1e-9 {
        return Err(Error::Model(format!(
            "duration {duration_s} s is not a multiple of the time step {dt_s} s"
        )));
    }
    Ok(r.round() as usize)
}

fn interpolate(mesh: &Mesh, field: &[f64], loc: (usize, usize, f64, f64)) -> f64 {
    let (ei, ej, s, t) = loc;
    let n = mesh.element_nodes(ei, ej);
    field[n[0]] * (1.0 - s) * (1.0 - t)
        + field[n[1]] * s * (1.0 - t)
        + field[n[2]] * s * t
        + field[n[3]] * (1.0 - s) * t
}

/// Sensor readings, one row per requested time and one column per sensor.
/// Times between steps are interpolated linearly.
pub fn sensor_temperatures(
    history: &TemperatureHistory,
    layout: &SensorLayout,
    sample_times_s: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let locs = layout
        .points
        .iter()
        .map(|&(x, y)| history.mesh.locate(x, y))
        .collect::<Result<Vec<_>>>()?;
    let t_end = history.n_steps() as f64 * history.dt_s;
    sample_times_s
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
                return Err(Error::Model(format!("sample time {t} s outside [0, {t_end}] s")));
            }
            let u = t / history.dt_s;
            let k0 = (u.floor() as usize).min(history.n_steps());
            let w = u - k0 as f64;
            let k1 = (k0 + 1).min(history.n_steps());
            Ok(locs
                .iter()
                .map(|&loc| {
                    let a = interpolate(&history.mesh, &history.fields[k0], loc);
                    if w < 1e-12 {
                        a
                    } else {
                        (1.0 - w) * a + w * interpolate(&history.mesh, &history.fields[k1], loc)
                    }
                })
                .collect())
        })
        .collect()
}

/// ∫ −k ∂T/∂x dy along `x = x_mid` for one field, W per unit depth with the
/// normal pointing towards +x.
fn midline_rate_of_field(mesh: &Mesh, conductivity: &[f64], field: &[f64], x_mid: f64) -> Result<f64> {
    if !(x_mid >= 0.0 && x_mid <= mesh.lx) {
        return Err(Error::Model(format!("midline x = {x_mid} outside the domain")));
    }
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let u = x_mid / hx;
    let r = u.round();
    let columns: Vec<usize> = if (u - r).abs() < 1e-9 && r >= 1.0 && (r as usize) < mesh.nx {
        vec![r as usize - 1, r as usize]
    } else {
        vec![(u.floor() as usize).min(mesh.nx - 1)]
    };
    let mut total = 0.0;
    for ej in 0..mesh.ny {
        let mut row = 0.0;
        for &ei in &columns {
            let n = mesh.element_nodes(ei, ej);
            let k = conductivity[ej * mesh.nx + ei];
            // ∂T/∂x is independent of x within a bilinear element and
            // linear in y, so the trapezoid over the row is exact.
            let q_bottom = -k * (field[n[1]] - field[n[0]]) / hx;
            let q_top = -k * (field[n[2]] - field[n[3]]) / hx;
            row += 0.5 * hy * (q_bottom + q_top);
        }
        total += row / columns.len() as f64;
    }
    Ok(total)
}

/// Heat rate through the vertical line `x = x_mid` at each step, W per unit
/// depth, normal `+x` (heat moving from the right edge to the left is
/// negative).
pub fn midline_heat_rate(history: &TemperatureHistory, x_mid: f64) -> Result<Vec<f64>> {
    history
        .fields
        .iter()
        .map(|f| midline_rate_of_field(&history.mesh, &history.conductivity, f, x_mid))
        .collect()
}

/// Heat rate through `x = x_mid` for an arbitrary nodal field on the mesh
/// of `materials`, W per unit depth with normal `+x`.
pub fn field_midline_heat_rate(materials: &MaterialMap, field: &[f64], x_mid: f64) -> Result<f64> {
    check_field(materials.mesh(), field)?;
    let k: Vec<f64> = materials.elements().iter().map(Material::conductivity).collect();
    midline_rate_of_field(materials.mesh(), &k, field, x_mid)
}

/// Bilinear interpolation of a nodal field at the sensor points.
pub fn field_sensor_values(mesh: &Mesh, field: &[f64], layout: &SensorLayout) -> Result<Vec<f64>> {
    check_field(mesh, field)?;
    layout
        .points
        .iter()
        .map(|&(x, y)| Ok(interpolate(mesh, field, mesh.locate(x, y)?)))
        .collect()
}

fn check_field(mesh: &Mesh, field: &[f64]) -> Result<()> {
    if field.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            actual: field.len(),
            context: "nodal field",
        });
    }
    Ok(())
}

/// Trapezoidal running integral, `Q(t_0) = 0`.
pub fn cumulative_heat(rate: &[f64], times_s: &[f64]) -> Result<Vec<f64>> {
    if rate.len() != times_s.len() {
        return Err(Error::DimensionMismatch {
            expected: times_s.len(),
            actual: rate.len(),
            context: "heat rate vs times",
        });
    }
    if times_s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(rate.len());
    let mut acc = 0.0;
    for i in 0..rate.len() {
        if i > 0 {
            acc += 0.5 * (times_s[i] - times_s[i - 1]) * (rate[i] + rate[i - 1]);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Writes `time_s,value` rows.
pub fn write_series_csv(path: &Path, times_s: &[f64], values: &[f64]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from("time_s,value\n");
    for (t, v) in times_s.iter().zip(values) {
        text.push_str(&format!("{t},{v}\n"));
    }
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn isotropic_model(mesh: Mesh, base: Material, alpha: f64, external: ExternalTemperature) -> Result<ThermalModel> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Model(format!("diffusivity must be positive, got {alpha}")));
    }
    let material = Material {
        diffusivity: alpha,
        ..base
    };
    Ok(ThermalModel::new(MaterialMap::uniform(mesh, material)?, external))
}

/// Isotropic model mapping a diffusivity to sensor readings at fixed times.
///
/// Outputs are sensor-major: all times of sensor 1, then sensor 2, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSensorModel {
    mesh: Mesh,
    base: Material,
    external: ExternalTemperature,
    layout: SensorLayout,
    sample_steps: Vec<usize>,
    locations: Vec<(usize, usize, f64, f64)>,
}

impl ThermalSensorModel {
    /// `sample_times_s` must fall on time steps covered by `external`.
    pub fn new(
        mesh: Mesh,
        base: Material,
        external: ExternalTemperature,
        layout: SensorLayout,
        sample_times_s: &[f64],
    ) -> Result<Self> {
        base.validate()?;
        let sample_steps = sample_times_s
            .iter()
            .map(|&t| steps_in(t, external.dt_s()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&k) = sample_steps.iter().max() {
            if k > external.n_steps() {
                return Err(Error::Model(format!("sample step {k} beyond the external series")));
            }
        }
        let locations = layout
            .points
            .iter()
            .map(|&(x, y)| mesh.locate(x, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            base,
            external,
            layout,
            sample_steps,
            locations,
        })
    }

    pub fn n_times(&self) -> usize {
        self.sample_steps.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.layout.len()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
}

impl ForwardModel for ThermalSensorModel {
    fn n_params(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        self.n_times() * self.n_sensors()
    }

    fn evaluate(&self, params: &[f64]) -> Result<Vec<f64>> {
        let model = isotropic_model(self.mesh, self.base, params[0], self.external.clone())?;
        let n_t = self.n_times();
        let last = self.sample_steps.iter().copied().max().unwrap_or(0);
        let mut out = vec![0.0; self.n_outputs()];
        march(&model, last, |k, field, _| {
            for (ti, _) in self.sample_steps.iter().enumerate().filter(|(_, &s)| s == k) {
                for (si, &loc) in self.locations.iter().enumerate() {
                    out[si * n_t + ti] = interpolate(&self.mesh, field, loc);
                }
            }
        })?;
        Ok(out)
    }
}

/// Flattened training-grid sensor readings for diffusivity `alpha`.
pub fn thermal_forward(model: &ThermalSensorModel, alpha: f64) -> Result<Vec<f64>> {
    model.evaluate(&[alpha])
}

/// Isotropic model mapping a diffusivity to the heat that has crossed the
/// midline into the insulated side by the end of the external series,
/// in joules for the configured slab depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeHeatModel {
    mesh: Mesh,
    base: Material,
    external: ExternalTemperature,
    x_mid: f64,
    depth_m: f64,
}

impl CumulativeHeatModel {
    pub fn new(mesh: Mesh, base: Material, external: ExternalTemperature, x_mid: f64, depth_m: f64) -> Result<Self> {
        base.validate()?;
        if !(x_mid >= 0.0 && x_mid <= mesh.lx) || !(depth_m > 0.0) {
            return Err(Error::Model(format!("invalid midline {x_mid} or depth {depth_m}")));
        }
        Ok(Self {
            mesh,
            base,
            external,
            x_mid,
            depth_m,
        })
    }
}

impl ForwardModel for CumulativeHeatModel {
    fn n_params(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn evaluate(&self, params: &[f64]) -> Result<Vec<f64>> {
        let model = isotropic_model(self.mesh, self.base, params[0], self.external.clone())?;
        let k = vec![model.materials.elements()[0].conductivity(); self.mesh.n_elements()];
        let dt = model.dt_s;
        let mut acc = 0.0;
        let mut prev: Option<f64> = None;
        let mut failure = None;
        march(
            &model,
            self.external.n_steps(),
            |_, field, _| match midline_rate_of_field(&self.mesh, &k, field, self.x_mid) {
                Ok(r) => {
                    if let Some(p) = prev {
                        acc += 0.5 * dt * (p + r);
                    }
                    prev = Some(r);
                }
                Err(e) => failure = Some(e),
            },
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(vec![-acc * self.depth_m])
    }
}
