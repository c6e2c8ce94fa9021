//! Config-driven experiment runner.
//!
//! [`run_experiment`] reads an [`ExperimentConfig`], runs it on a thread pool
//! of the requested size and writes `<kind>.csv` plus a `<kind>.json` sidecar
//! into the output directory. Every CSV ends with a `# sha256=` line over the
//! bytes before it. Trials draw from streams keyed by their index, so the CSV
//! does not depend on the worker count.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod replay;

use std::path::{Path, PathBuf};

pub use config::{resolve_seed, Diagnostic, ExperimentConfig, ExperimentKind, SEED_ENV};
pub use error::{CliError, CliResult};
pub use experiments::Outcome;
pub use output::ArtifactPaths;
pub use replay::{replay, ReplayCommand};

use output::{sha256_hex, write_atomic, write_json_atomic};

/// Overrides taken from the command line and the environment.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Raw value of `RCP_SEED`, if set.
    pub env_seed: Option<String>,
    /// Thread count; `None` lets the pool pick.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunOptions {
    /// Options with `env_seed` read from the process environment.
    pub fn from_env() -> Self {
        Self { env_seed: std::env::var(SEED_ENV).ok(), ..Self::default() }
    }

    pub fn resolve_seed(&self, config: &ExperimentConfig) -> CliResult<u64> {
        resolve_seed(self.seed, self.env_seed.as_deref(), config.seed)
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("."))
    }
}

pub(crate) fn provenance(config: &ExperimentConfig) -> String {
    let canon = serde_json::to_vec(config).unwrap_or_default();
    format!(
        "rcp-cli {} (rcp-core {}) config-{}",
        env!("CARGO_PKG_VERSION"),
        env!("CARGO_PKG_VERSION"),
        &sha256_hex(&canon)[..12]
    )
}

/// Runs `f` on a pool with `workers` threads.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::config("--workers", "must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::config("--workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs the experiment and writes its artifacts. Nothing is written unless
/// the computation succeeds.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> CliResult<ArtifactPaths> {
    let seed = opts.resolve_seed(config)?;
    let outcome = with_workers(opts.workers, || experiments::compute(config, seed))??;
    let csv = outcome.table.render()?;
    let dir = opts.out_dir(config);
    let stem = config.kind.name();
    let paths = ArtifactPaths { csv: dir.join(format!("{stem}.csv")), sidecar: dir.join(format!("{stem}.json")) };
    let mut echo = config.clone();
    echo.seed = Some(seed);
    let sidecar = serde_json::json!({
        "kind": stem,
        "provenance": provenance(&echo),
        "seed": seed,
        "csv": paths.csv.file_name().map(|f| f.to_string_lossy().into_owned()),
        "csv_sha256": sha256_hex(&csv),
        "columns": outcome.table.header(),
        "config": echo,
        "result": outcome.result,
    });
    write_atomic(&paths.csv, &csv)?;
    write_json_atomic(&paths.sidecar, &sidecar)?;
    Ok(paths)
}

/// Loads a config file and runs it.
pub fn run_config_file(path: &Path, opts: &RunOptions) -> CliResult<ArtifactPaths> {
    run_experiment(&ExperimentConfig::load(path)?, opts)
}

/// Builds the sample described by a config and writes the dump with its baselines.
pub fn sample_config_file(path: &Path, opts: &RunOptions) -> CliResult<replay::SampleArtifacts> {
    let config = ExperimentConfig::load(path)?;
    let seed = opts.resolve_seed(&config)?;
    let sample = with_workers(opts.workers, || replay::sample_from_config(&config, seed))??;
    replay::write_sample(&sample, &opts.out_dir(&config), &config, seed)
}
