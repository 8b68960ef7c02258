//! Affine-invariant ensemble sampler (stretch move) with an effective
//! sample size stopping rule.
//!
//! Random numbers are always drawn serially in a fixed order, so a run is
//! bit-reproducible for a given seed whether or not log-densities are
//! evaluated in parallel.

mod autocorr;
mod ess;

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use autocorr::{autocorrelation, integrated_autocorrelation_time, SOKAL_C};
pub use ess::{effective_sample_size, ess_threshold, EssCriterion};

use crate::error::{Error, Result};
use crate::problem::InferenceProblem;

const MAX_INIT_ATTEMPTS: usize = 100;
const BINARY_MAGIC: &[u8; 4] = b"EMBC";
const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_walkers: usize,
    pub burn_in: usize,
    /// Iterations between stopping-rule checks.
    pub batch: usize,
    /// Hard cap on the number of iterations.
    pub max_samples: usize,
    /// Per-parameter ESS target; derived from `criterion` when absent.
    pub ess_target: Option<f64>,
    pub criterion: EssCriterion,
    /// Stretch scale `a > 1`.
    pub stretch: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_walkers: 10,
            burn_in: 200,
            batch: 100,
            max_samples: 10_000,
            ess_target: None,
            criterion: EssCriterion::default(),
            stretch: 2.0,
            seed: 0,
            parallel: false,
        }
    }
}

/// Why sampling stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EssReached,
    MaxSamples,
}

/// Walker positions and log-densities for every iteration, including the
/// initial ensemble as iteration 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleChain {
    n_walkers: usize,
    dim: usize,
    names: Vec<String>,
    positions: Vec<f64>,
    log_posterior: Vec<f64>,
    burn_in: usize,
    seed: u64,
    accepted: u64,
    proposed: u64,
    stop: StopReason,
    ess_target: f64,
    ess: Vec<f64>,
    tau: Vec<f64>,
}

impl EnsembleChain {
    pub fn n_walkers(&self) -> usize {
        self.n_walkers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of completed iterations (the initial ensemble is not counted).
    pub fn n_iterations(&self) -> usize {
        self.log_posterior.len() / self.n_walkers - 1
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    pub fn converged(&self) -> bool {
        self.stop == StopReason::EssReached
    }

    pub fn ess_target(&self) -> f64 {
        self.ess_target
    }

    /// Per-parameter ESS at the final check (0 when undefined).
    pub fn ess(&self) -> &[f64] {
        &self.ess
    }

    pub fn autocorrelation_times(&self) -> &[f64] {
        &self.tau
    }

    pub fn acceptance_fraction(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Position of `walker` at `iteration` (0 = initial ensemble).
    pub fn position(&self, iteration: usize, walker: usize) -> &[f64] {
        let start = (iteration * self.n_walkers + walker) * self.dim;
        &self.positions[start..start + self.dim]
    }

    pub fn log_posterior_at(&self, iteration: usize, walker: usize) -> f64 {
        self.log_posterior[iteration * self.n_walkers + walker]
    }

    /// First post-burn-in iteration index.
    fn first_kept(&self) -> usize {
        (self.burn_in + 1).min(self.n_iterations() + 1)
    }

    pub fn n_kept_iterations(&self) -> usize {
        self.n_iterations() + 1 - self.first_kept()
    }

    /// Post-burn-in draws of one parameter, iteration-major.
    pub fn kept_values(&self, param: usize) -> Vec<f64> {
        (self.first_kept()..=self.n_iterations())
            .flat_map(|it| (0..self.n_walkers).map(move |w| (it, w)))
            .map(|(it, w)| self.position(it, w)[param])
            .collect()
    }

    /// Post-burn-in draws, iteration-major.
    pub fn kept_samples(&self) -> Vec<Vec<f64>> {
        (self.first_kept()..=self.n_iterations())
            .flat_map(|it| (0..self.n_walkers).map(move |w| (it, w)))
            .map(|(it, w)| self.position(it, w).to_vec())
            .collect()
    }

    /// Per-walker scalar chains of one parameter over post-burn-in iterations.
    pub fn walker_series(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.n_walkers)
            .map(|w| {
                (self.first_kept()..=self.n_iterations())
                    .map(|it| self.position(it, w)[param])
                    .collect()
            })
            .collect()
    }

    /// Posterior mean and standard deviation of every parameter.
    pub fn summary(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|p| {
                let v = self.kept_values(p);
                mean_std(&v)
            })
            .collect()
    }

    /// `n` draws at evenly spaced positions of the post-burn-in sequence.
    pub fn thinned(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        let all = self.kept_samples();
        if all.is_empty() {
            return Err(Error::Sampler("chain has no post-burn-in samples".into()));
        }
        if n == 0 || n > all.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot thin {} samples to {n}",
                all.len()
            )));
        }
        let step = all.len() as f64 / n as f64;
        Ok((0..n)
            .map(|i| all[((i as f64 + 0.5) * step) as usize].clone())
            .collect())
    }

    /// Stored sample with the highest log posterior (post-burn-in when
    /// available).
    pub fn map_sample(&self) -> Vec<f64> {
        let start = if self.n_kept_iterations() > 0 {
            self.first_kept()
        } else {
            0
        };
        let mut best = (f64::NEG_INFINITY, start, 0);
        for it in start..=self.n_iterations() {
            for w in 0..self.n_walkers {
                let lp = self.log_posterior_at(it, w);
                if lp > best.0 {
                    best = (lp, it, w);
                }
            }
        }
        self.position(best.1, best.2).to_vec()
    }

    fn update_diagnostics(&mut self) {
        let kept = self.n_kept_iterations();
        self.tau = vec![f64::NAN; self.dim];
        self.ess = vec![0.0; self.dim];
        if kept < 2 {
            return;
        }
        for p in 0..self.dim {
            if let Ok(tau) = integrated_autocorrelation_time(&self.walker_series(p)) {
                self.tau[p] = tau;
                self.ess[p] = effective_sample_size(kept, self.n_walkers, tau);
            }
        }
    }

    /// CSV with columns `iteration,walker,<names>,log_posterior`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut header = vec!["iteration".to_string(), "walker".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("log_posterior".into());
        writeln!(out, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
        for it in 0..=self.n_iterations() {
            for w in 0..self.n_walkers {
                let mut line = format!("{it},{w}");
                for v in self.position(it, w) {
                    line.push_str(&format!(",{v:.17e}"));
                }
                line.push_str(&format!(",{:.17e}", self.log_posterior_at(it, w)));
                writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Binary dump, all integers and floats little-endian:
    ///
    /// ```text
    /// b"EMBC" | u32 version | u64 rows | u64 walkers | u64 dim | u64 burn_in
    /// | u64 seed | u64 name_bytes | names joined by '\n' (UTF-8)
    /// | f64 positions[rows][walkers][dim] | f64 log_posterior[rows][walkers]
    /// ```
    ///
    /// `rows` includes the initial ensemble.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let names = self.names.join("\n");
        let mut buf = Vec::with_capacity(48 + names.len() + 8 * (self.positions.len() + self.log_posterior.len()));
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        for v in [self.n_iterations() + 1, self.n_walkers, self.dim, self.burn_in] {
            buf.extend_from_slice(&(v as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&(names.len() as u64).to_le_bytes());
        buf.extend_from_slice(names.as_bytes());
        for v in self.positions.iter().chain(&self.log_posterior) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a chain written by [`EnsembleChain::write_binary`]. Diagnostics
    /// are recomputed; the stop reason is reported as `MaxSamples` unless
    /// every ESS reaches `ess_target`.
    pub fn read_binary(path: &Path, ess_target: f64) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::Sampler(format!("{}: {what}", path.display()));
        if bytes.len() < 56 || &bytes[..4] != BINARY_MAGIC {
            return Err(bad("not a chain file"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let rows = u64_at(8) as usize;
        let n_walkers = u64_at(16) as usize;
        let dim = u64_at(24) as usize;
        let burn_in = u64_at(32) as usize;
        let seed = u64_at(40);
        let name_len = u64_at(48) as usize;
        let mut off: usize = 56;
        let names_end = off.checked_add(name_len).ok_or_else(|| bad("corrupt header"))?;
        let names_raw = bytes.get(off..names_end).ok_or_else(|| bad("truncated names"))?;
        let names: Vec<String> = std::str::from_utf8(names_raw)
            .map_err(|_| bad("names are not UTF-8"))?
            .split('\n')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        off = names_end;
        let n_pos = rows * n_walkers * dim;
        let n_lp = rows * n_walkers;
        if bytes.len() != off + 8 * (n_pos + n_lp) || rows == 0 || n_walkers == 0 || names.len() != dim {
            return Err(bad("size does not match header"));
        }
        let floats: Vec<f64> = bytes[off..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut chain = EnsembleChain {
            n_walkers,
            dim,
            names,
            positions: floats[..n_pos].to_vec(),
            log_posterior: floats[n_pos..].to_vec(),
            burn_in,
            seed,
            accepted: 0,
            proposed: 0,
            stop: StopReason::MaxSamples,
            ess_target,
            ess: vec![],
            tau: vec![],
        };
        chain.update_diagnostics();
        if chain.n_kept_iterations() >= 2 && chain.ess.iter().all(|&e| e >= ess_target) {
            chain.stop = StopReason::EssReached;
        }
        Ok(chain)
    }
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Draw from `g(z) ∝ 1/√z` on `[1/a, a]` by inversion.
pub fn draw_stretch<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    let u: f64 = rng.random();
    let s = (a - 1.0) * u + 1.0;
    s * s / a
}

/// One full stretch-move sweep: first half of the ensemble against the
/// second, then the second against the updated first. Returns the number
/// of accepted proposals.
pub fn stretch_move<T, R>(
    positions: &mut [Vec<f64>],
    log_probs: &mut [f64],
    target: &T,
    a: f64,
    rng: &mut R,
    parallel: bool,
) -> Result<usize>
where
    T: Fn(&[f64]) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    let m = positions.len();
    if m < 2 {
        return Err(Error::Sampler("need at least two walkers".into()));
    }
    if !(a > 1.0) {
        return Err(Error::Sampler(format!("stretch scale must exceed 1, got {a}")));
    }
    let dim = positions[0].len();
    let half = m / 2;
    let mut accepted = 0;
    for (active, other) in [(0..half, half..m), (half..m, 0..half)] {
        let others: Vec<usize> = other.collect();
        let draws: Vec<(usize, f64, Vec<f64>, f64)> = active
            .map(|k| {
                let j = others[rng.random_range(0..others.len())];
                let z = draw_stretch(rng, a);
                let u: f64 = rng.random();
                let proposal: Vec<f64> = positions[j]
                    .iter()
                    .zip(&positions[k])
                    .map(|(y, x)| y + z * (x - y))
                    .collect();
                (k, z, proposal, u)
            })
            .collect();
        let new_lp: Vec<Result<f64>> = if parallel {
            draws.par_iter().map(|(_, _, p, _)| target(p)).collect()
        } else {
            draws.iter().map(|(_, _, p, _)| target(p)).collect()
        };
        for ((k, z, proposal, u), lp) in draws.into_iter().zip(new_lp) {
            let lp = lp?;
            let lp = if lp.is_nan() { f64::NEG_INFINITY } else { lp };
            let log_ratio = (dim as f64 - 1.0) * z.ln() + lp - log_probs[k];
            if lp > f64::NEG_INFINITY && (log_ratio >= 0.0 || u.ln() < log_ratio) {
                positions[k] = proposal;
                log_probs[k] = lp;
                accepted += 1;
            }
        }
    }
    Ok(accepted)
}

fn evaluate_all<T>(target: &T, positions: &[Vec<f64>], parallel: bool) -> Result<Vec<f64>>
where
    T: Fn(&[f64]) -> Result<f64> + Sync,
{
    if parallel {
        positions.par_iter().map(|p| target(p)).collect()
    } else {
        positions.iter().map(|p| target(p)).collect()
    }
}

/// Runs the sampler.
///
/// `init` draws one starting position; walkers whose starting log density
/// is not finite are redrawn up to 100 times.
pub fn run<T, I>(target: &T, mut init: I, names: Vec<String>, config: &SamplerConfig) -> Result<EnsembleChain>
where
    T: Fn(&[f64]) -> Result<f64> + Sync,
    I: FnMut(&mut ChaCha20Rng) -> Vec<f64>,
{
    let dim = names.len();
    let m = config.n_walkers;
    if dim == 0 {
        return Err(Error::Sampler("zero-dimensional target".into()));
    }
    if m < 2 * dim || m < 2 {
        return Err(Error::Sampler(format!("{m} walkers is too few for dimension {dim}")));
    }
    if config.batch == 0 {
        return Err(Error::Sampler("batch size must be positive".into()));
    }
    let ess_target = match config.ess_target {
        Some(t) => t,
        None => config.criterion.threshold(dim)?,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let mut positions: Vec<Vec<f64>> = (0..m).map(|_| init(&mut rng)).collect();
    if positions.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: positions.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
            context: "initial walker position",
        });
    }
    let mut log_probs = evaluate_all(target, &positions, config.parallel)?;
    for w in 0..m {
        let mut attempts = 0;
        while !log_probs[w].is_finite() {
            if attempts == MAX_INIT_ATTEMPTS {
                return Err(Error::Sampler(format!(
                    "no finite starting point for walker {w} after {MAX_INIT_ATTEMPTS} draws"
                )));
            }
            positions[w] = init(&mut rng);
            log_probs[w] = target(&positions[w])?;
            attempts += 1;
        }
    }

    let mut chain = EnsembleChain {
        n_walkers: m,
        dim,
        names,
        positions: positions.iter().flatten().copied().collect(),
        log_posterior: log_probs.clone(),
        burn_in: config.burn_in,
        seed: config.seed,
        accepted: 0,
        proposed: 0,
        stop: StopReason::MaxSamples,
        ess_target,
        ess: vec![0.0; dim],
        tau: vec![f64::NAN; dim],
    };

    let mut iterations = 0;
    while iterations < config.max_samples {
        let n = config.batch.min(config.max_samples - iterations);
        let mut batch_accepted = 0;
        for _ in 0..n {
            batch_accepted += stretch_move(
                &mut positions,
                &mut log_probs,
                target,
                config.stretch,
                &mut rng,
                config.parallel,
            )?;
            chain.positions.extend(positions.iter().flatten());
            chain.log_posterior.extend_from_slice(&log_probs);
        }
        iterations += n;
        chain.accepted += batch_accepted as u64;
        chain.proposed += (n * m) as u64;
        if batch_accepted == 0 {
            return Err(Error::Sampler(format!(
                "no proposal accepted during iterations {}..{iterations}; walkers are stuck",
                iterations - n
            )));
        }
        chain.update_diagnostics();
        log::debug!("iteration {iterations}: ESS {:?} (target {ess_target:.1})", chain.ess);
        if chain.n_kept_iterations() >= 2 && chain.ess.iter().all(|&e| e >= ess_target) {
            chain.stop = StopReason::EssReached;
            break;
        }
    }
    Ok(chain)
}

/// Samples the posterior of `problem`, starting from prior draws.
pub fn run_problem(problem: &InferenceProblem, config: &SamplerConfig) -> Result<EnsembleChain> {
    run(
        &|s: &[f64]| problem.log_posterior(s),
        |rng: &mut ChaCha20Rng| problem.sample_prior(rng),
        problem.parameter_names(),
        config,
    )
}
