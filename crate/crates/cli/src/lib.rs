//! Experiment driver: configuration, the five studies, and deterministic
//! report output.

pub mod config;
pub mod experiments;
pub mod formats;
pub mod report;

use std::io;
use std::path::{Path, PathBuf};

use config::{ConfigError, Experiment, ExperimentConfig};
use report::{Report, RunMetadata};

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] fpam_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        }
    }
}

/// Run the configured study on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    cfg.validate()?;
    let report = match cfg.experiment {
        Experiment::Renorm => experiments::run_renorm(cfg)?,
        Experiment::Converge => experiments::run_converge(cfg)?,
        Experiment::Identity => experiments::run_identity(cfg)?,
        Experiment::Chaos => experiments::run_chaos(cfg)?,
        Experiment::Regularity => experiments::run_regularity(cfg)?,
    };
    Ok(report)
}

/// Run on a dedicated pool of `threads` workers (default: rayon's choice).
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Report, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    builder.build()?.install(|| run(cfg))
}

pub struct Outcome {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Run and write the report into `out`.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>, out: &Path) -> Result<Outcome, RunError> {
    let mut meta = RunMetadata::start(threads.unwrap_or_else(rayon::current_num_threads));
    let report = run_with_threads(cfg, threads)?;
    meta.finish();
    let files = report.write(out, cfg, &meta)?;
    Ok(Outcome { report, files })
}
