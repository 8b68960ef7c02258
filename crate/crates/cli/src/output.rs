//! Output directory layout and metadata sidecars.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Resolved output root with the fixed sub-layout:
///
/// ```text
/// data/     generated data sets
/// chains/   binary chains, one per (likelihood, seed)
/// qoi/      push-forward samples and summaries
/// summary.csv, scan.csv
/// ```
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn dir(&self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.root.join(name);
        std::fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    pub fn linear_data(&self, seed: u64, scan_index: Option<usize>) -> PathBuf {
        let name = match scan_index {
            Some(i) => format!("linear_seed{seed}_scan{i:02}.csv"),
            None => format!("linear_seed{seed}.csv"),
        };
        self.root.join("data").join(name)
    }

    pub fn thermal_data(&self, seed: u64, part: &str, ext: &str) -> PathBuf {
        self.root.join("data").join(format!("thermal_{part}_seed{seed}.{ext}"))
    }

    pub fn chain(&self, likelihood: &str, seed: u64) -> PathBuf {
        self.root
            .join("chains")
            .join(format!("{}_seed{seed}.bin", likelihood.to_lowercase()))
    }

    pub fn qoi(&self, likelihood: &str, seed: u64, ext: &str) -> PathBuf {
        self.root
            .join("qoi")
            .join(format!("{}_seed{seed}.{ext}", likelihood.to_lowercase()))
    }
}

/// Configuration echo attached to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Echo<'a> {
    pub tool_version: &'static str,
    pub config: &'a ExperimentConfig,
    /// Text of the config file as given, if any.
    pub config_source: Option<&'a str>,
}

#[derive(Serialize)]
struct Meta<'a> {
    file: String,
    command: &'a str,
    seeds: &'a [u64],
    #[serde(flatten)]
    echo: &'a Echo<'a>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes `<path>.meta.json` next to an output file.
pub fn write_meta(path: &Path, command: &str, seeds: &[u64], echo: &Echo) -> Result<(), CliError> {
    let meta = Meta {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        command,
        seeds,
        echo,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Config(e.to_string()))?;
    let side = sidecar_path(path);
    std::fs::write(&side, text + "\n").map_err(|e| CliError::io(&side, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
