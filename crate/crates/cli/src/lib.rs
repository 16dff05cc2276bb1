//! Runs configured experiments of the `lognd` harness and writes their
//! reports, tables, plot data and matrices with a checksum manifest.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use config::{ConfigError, RawConfig};
use experiments::Params;
use lognd::harness::ExperimentReport;
use output::Format;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATES_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Output directory when neither the flag nor the config names one.
pub const DEFAULT_OUTPUT: &str = "lognd-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("experiment {name} failed: {source}")]
    Experiment { name: String, source: lognd::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Format,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub params: Params,
    pub report: ExperimentReport,
    pub runtime: Duration,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub runs: Vec<ExperimentRun>,
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.report.passed())
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_GATES_FAILED
        }
    }

    pub fn find(&self, experiment: &str) -> Option<&ExperimentRun> {
        self.runs.iter().find(|r| r.params.experiment.name() == experiment)
    }
}

/// Loads, validates and runs the config at `path`.
pub fn run(path: &Path, opts: &RunOptions, progress: impl FnMut(&ExperimentRun)) -> Result<RunSummary, CliError> {
    run_config(config::load(path)?, opts, progress)
}

/// Runs every experiment of `raw` in order, calling `progress` after each.
/// Stops at the first experiment that cannot be evaluated.
pub fn run_config(
    raw: RawConfig,
    opts: &RunOptions,
    mut progress: impl FnMut(&ExperimentRun),
) -> Result<RunSummary, CliError> {
    let cfg = config::resolve(raw, opts.seed)?;
    let out_dir = opts
        .out
        .clone()
        .or(cfg.output)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;

    let mut runs = Vec::new();
    let mut files = Vec::new();
    for params in cfg.runs {
        let name = params.experiment.name();
        let start = Instant::now();
        let outcome = experiments::run(&params).map_err(|source| CliError::Experiment {
            name: name.into(),
            source,
        })?;
        let runtime = start.elapsed();
        let dir = out_dir.join(name);
        let written = output::write_outcome(&outcome, &dir, opts.format).map_err(io_err(&dir))?;
        files.extend(written.iter().cloned());
        let mut report = outcome.report;
        report.runtime = runtime;
        let run = ExperimentRun {
            params,
            report,
            runtime,
            files: written,
        };
        progress(&run);
        runs.push(run);
    }
    let manifest = output::write_manifest(&out_dir, &files).map_err(io_err(&out_dir))?;
    Ok(RunSummary {
        runs,
        out_dir,
        manifest,
    })
}
