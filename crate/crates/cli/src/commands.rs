//! Subcommand implementations.

use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use embedcal::datagen::{
    generate_linear, generate_thermal, LinearGenSpec, LinearVariant, SensorData, ThermalGenSpec, ThermalTruth,
};
use embedcal::qoi::{cumulative_heat_qoi, PushSettings, QoiSet};
use embedcal::studies::{
    calibrate as run_calibration, linear_problem, linear_qoi, summary_rows, thermal_heat_model, thermal_problem,
    write_scan_csv, write_summary_csv, ScanKind, ScanRow, SummaryRow,
};
use embedcal::{EnsembleChain, LikelihoodKind, ObservationSet, PceSettings};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{write_meta, write_text, Echo, Layout};
use crate::CliError;

/// Outcome of a command that did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    /// Some rows are flagged: unconverged chains or failed scan points.
    Partial,
}

pub struct Context {
    pub config: ExperimentConfig,
    pub config_source: Option<String>,
    pub layout: Layout,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn echo(&self) -> Echo<'_> {
        Echo {
            tool_version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            config_source: self.config_source.as_deref(),
        }
    }

    fn meta(&self, path: &Path, command: &str, seeds: &[u64]) -> Result<(), CliError> {
        write_meta(path, command, seeds, &self.echo())
    }

    fn linear_spec(&self, seed: u64, variant: LinearVariant) -> LinearGenSpec {
        LinearGenSpec {
            seed,
            variant,
            ..self.config.linear.data
        }
    }

    fn thermal_spec(&self, seed: u64) -> ThermalGenSpec {
        ThermalGenSpec {
            seed,
            ..self.config.thermal.data.clone()
        }
    }

    fn jobs(&self) -> Vec<(u64, LikelihoodKind)> {
        let kinds = self.config.likelihood_kinds();
        self.config
            .seed_list()
            .into_iter()
            .flat_map(|s| kinds.iter().map(move |&k| (s, k)))
            .collect()
    }
}

fn variant_for(scan: ScanKind, value: f64) -> LinearVariant {
    match scan {
        ScanKind::Noise => LinearVariant::None,
        ScanKind::Offset => LinearVariant::Offset { delta: value },
        ScanKind::Outlier => LinearVariant::outliers(value),
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

pub fn generate(ctx: &Context) -> Result<Status, CliError> {
    ctx.layout.dir("data")?;
    let seeds = ctx.config.seed_list();
    let written: Vec<Vec<std::path::PathBuf>> = ctx.pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| generate_seed(ctx, seed))
            .collect::<Result<_, CliError>>()
    })?;
    for (paths, &seed) in written.iter().zip(&seeds) {
        for p in paths {
            ctx.meta(p, "generate", &[seed])?;
            info!("wrote {}", p.display());
        }
    }
    Ok(Status::Ok)
}

fn generate_seed(ctx: &Context, seed: u64) -> Result<Vec<std::path::PathBuf>, CliError> {
    let layout = &ctx.layout;
    match ctx.config.experiment {
        ExperimentKind::Thermal => {
            let data = generate_thermal(&ctx.thermal_spec(seed))?;
            let train = layout.thermal_data(seed, "training", "csv");
            let test = layout.thermal_data(seed, "testing", "csv");
            let truth = layout.thermal_data(seed, "truth", "json");
            data.training.write_csv(&train)?;
            data.testing.write_csv(&test)?;
            data.truth.write_json(&truth)?;
            Ok(vec![train, test, truth])
        }
        ExperimentKind::LinearOffsetScan | ExperimentKind::LinearOutlierScan => {
            let scan = ctx.config.experiment.scan().expect("scan experiment");
            let mut out = Vec::new();
            for (i, &v) in ctx.config.scan_values().iter().enumerate() {
                let path = layout.linear_data(seed, Some(i));
                generate_linear(&ctx.linear_spec(seed, variant_for(scan, v)))?.write_csv(&path)?;
                out.push(path);
            }
            Ok(out)
        }
        _ => {
            let path = layout.linear_data(seed, None);
            generate_linear(&ctx.linear_spec(seed, LinearVariant::None))?.write_csv(&path)?;
            Ok(vec![path])
        }
    }
}

fn load_linear(ctx: &Context, seed: u64) -> Result<ObservationSet, CliError> {
    let path = ctx.layout.linear_data(seed, None);
    require(&path)?;
    Ok(ObservationSet::read_csv(&path, ctx.config.linear.prescribed_noise())?)
}

fn load_training(ctx: &Context, seed: u64) -> Result<SensorData, CliError> {
    let path = ctx.layout.thermal_data(seed, "training", "csv");
    require(&path)?;
    Ok(SensorData::read_csv(&path, ctx.config.thermal.data.output_noise_std)?)
}

fn calibrate_one(ctx: &Context, seed: u64, kind: LikelihoodKind) -> Result<EnsembleChain, CliError> {
    let cfg = &ctx.config;
    let problem = if cfg.experiment.is_thermal() {
        let training = load_training(ctx, seed)?;
        let t = &cfg.thermal;
        thermal_problem(
            &training,
            &ctx.thermal_spec(seed),
            kind,
            &t.priors,
            t.mesh_elements,
            t.pce,
        )?
    } else {
        let obs = load_linear(ctx, seed)?;
        let l = &cfg.linear;
        linear_problem(&obs, l.prescribed_noise(), kind, &l.priors, l.embedded)?
    };
    info!("calibrating {} seed {seed}", kind.label());
    Ok(run_calibration(&problem, &cfg.sampler_for(seed))?.chain)
}

pub fn calibrate(ctx: &Context) -> Result<Status, CliError> {
    if ctx.config.experiment.scan().is_some() {
        return Err(CliError::Config(
            "scan experiments are run with the `scan` subcommand".into(),
        ));
    }
    let jobs = ctx.jobs();
    let chains: Vec<EnsembleChain> = ctx.pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, kind)| calibrate_one(ctx, seed, kind))
            .collect::<Result<_, CliError>>()
    })?;
    ctx.layout.dir("chains")?;
    let mut rows: Vec<SummaryRow> = Vec::new();
    for (&(seed, kind), chain) in jobs.iter().zip(&chains) {
        let path = ctx.layout.chain(kind.label(), seed);
        chain.write_binary(&path)?;
        ctx.meta(&path, "calibrate", &[seed])?;
        if !chain.converged() {
            warn!(
                "{} seed {seed}: ESS {:?} below target {:.1} after {} iterations",
                kind.label(),
                chain.ess(),
                chain.ess_target(),
                chain.n_iterations()
            );
        }
        rows.extend(summary_rows(kind.label(), chain));
    }
    let seeds = ctx.config.seed_list();
    let csv = ctx.layout.root.join("summary.csv");
    write_summary_csv(&csv, &rows)?;
    ctx.meta(&csv, "calibrate", &seeds)?;
    let json = ctx.layout.root.join("summary.json");
    write_text(
        &json,
        &(serde_json::to_string_pretty(&rows).map_err(|e| CliError::Config(e.to_string()))? + "\n"),
    )?;
    ctx.meta(&json, "calibrate", &seeds)?;
    info!("wrote {}", csv.display());
    Ok(if rows.iter().all(|r| r.converged) {
        Status::Ok
    } else {
        Status::Partial
    })
}

pub fn scan(ctx: &Context) -> Result<Status, CliError> {
    let Some(scan) = ctx.config.experiment.scan() else {
        return Err(CliError::Config(format!(
            "experiment {:?} has no scan grid; use `calibrate`",
            ctx.config.experiment
        )));
    };
    let values = ctx.config.scan_values();
    let jobs: Vec<(u64, f64, LikelihoodKind)> = ctx
        .jobs()
        .into_iter()
        .flat_map(|(s, k)| values.iter().map(move |&v| (s, v, k)))
        .collect();
    let results: Vec<Result<EnsembleChain, CliError>> = ctx.pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, value, kind)| {
                let l = &ctx.config.linear;
                let obs = generate_linear(&ctx.linear_spec(seed, variant_for(scan, value)))?;
                let noise = if scan == ScanKind::Noise {
                    value
                } else {
                    l.prescribed_noise()
                };
                let problem = linear_problem(&obs, noise, kind, &l.priors, l.embedded)?;
                Ok(run_calibration(&problem, &ctx.config.sampler_for(seed))?.chain)
            })
            .collect()
    });
    let mut rows = Vec::new();
    for (&(seed, value, kind), result) in jobs.iter().zip(results) {
        match result {
            Ok(chain) => rows.extend(
                summary_rows(kind.label(), &chain)
                    .into_iter()
                    .map(|r| ScanRow::from_summary(value, r)),
            ),
            Err(e) => {
                warn!("{} seed {seed} at {value}: {e}", kind.label());
                rows.push(ScanRow {
                    scan_value: value,
                    likelihood: kind.label().to_string(),
                    seed,
                    param: "*".into(),
                    mean: f64::NAN,
                    std: f64::NAN,
                    ess: 0.0,
                    converged: false,
                });
            }
        }
    }
    let path = ctx.layout.root.join("scan.csv");
    write_scan_csv(&path, &rows)?;
    ctx.meta(&path, "scan", &ctx.config.seed_list())?;
    info!("wrote {}", path.display());
    Ok(if rows.iter().all(|r| r.converged) {
        Status::Ok
    } else {
        Status::Partial
    })
}

fn push_one(ctx: &Context, seed: u64, kind: LikelihoodKind) -> Result<QoiSet, CliError> {
    let cfg = &ctx.config;
    let path = ctx.layout.chain(kind.label(), seed);
    require(&path)?;
    let sampler = cfg.sampler_for(seed);
    let dim = if cfg.experiment.is_thermal() || cfg.linear.embedded {
        2
    } else {
        1
    };
    let target = match sampler.ess_target {
        Some(t) => t,
        None => sampler.criterion.threshold(dim)?,
    };
    let chain = EnsembleChain::read_binary(&path, target)?;
    if chain.dim() != dim {
        return Err(CliError::Config(format!(
            "{}: chain has {} parameters, the configuration expects {dim}",
            path.display(),
            chain.dim()
        )));
    }
    if cfg.experiment.is_thermal() {
        let truth_path = ctx.layout.thermal_data(seed, "truth", "json");
        require(&truth_path)?;
        let truth = ThermalTruth::read_json(&truth_path)?;
        let model = thermal_heat_model(&ctx.thermal_spec(seed), cfg.thermal.mesh_elements)?;
        let settings = PushSettings {
            n_p: cfg.push.n_p,
            mode: cfg.push.mode,
            pce: cfg.thermal.pce,
            noise_std: 0.0,
            seed,
            parallel: true,
        };
        Ok(cumulative_heat_qoi(
            &chain,
            &model,
            Some(truth.final_heat_j()),
            &settings,
        )?)
    } else {
        let obs = load_linear(ctx, seed)?;
        let x = cfg.linear.qoi_x;
        let y_obs = obs.x.iter().position(|&xi| (xi - x).abs() < 1e-9).map(|i| obs.y[i]);
        let settings = PushSettings {
            n_p: cfg.push.n_p,
            mode: cfg.push.mode,
            pce: PceSettings::default(),
            noise_std: cfg.linear.prescribed_noise(),
            seed,
            parallel: false,
        };
        Ok(linear_qoi(&chain, cfg.linear.embedded, x, y_obs, &settings)?)
    }
}

pub fn push(ctx: &Context) -> Result<Status, CliError> {
    if ctx.config.experiment.scan().is_some() {
        return Err(CliError::Config(
            "scan experiments have no stored chains to push".into(),
        ));
    }
    let jobs = ctx.jobs();
    let sets: Vec<QoiSet> = ctx.pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, kind)| push_one(ctx, seed, kind))
            .collect::<Result<_, CliError>>()
    })?;
    ctx.layout.dir("qoi")?;
    for (&(seed, kind), set) in jobs.iter().zip(&sets) {
        let csv = ctx.layout.qoi(kind.label(), seed, "csv");
        set.write_csv(&csv)?;
        ctx.meta(&csv, "push", &[seed])?;
        let json = ctx.layout.qoi(kind.label(), seed, "json");
        write_text(&json, &(set.summary_json()? + "\n"))?;
        ctx.meta(&json, "push", &[seed])?;
        info!(
            "{} seed {seed}: mu_P mean {:.6e}, sigma_P mean {:.6e}",
            kind.label(),
            set.mu_p.summary.mean,
            set.sigma_p.summary.mean
        );
    }
    Ok(Status::Ok)
}

pub fn all(ctx: &Context) -> Result<Status, CliError> {
    let mut status = generate(ctx)?;
    if ctx.config.experiment.scan().is_some() {
        status = status.max(scan(ctx)?);
    } else {
        status = status.max(calibrate(ctx)?);
        status = status.max(push(ctx)?);
    }
    Ok(status)
}
