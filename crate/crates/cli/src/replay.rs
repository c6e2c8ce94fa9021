//! Sample dumps and their replay.
//!
//! `sample` builds one graphical sample, saves it and writes the baseline
//! CSVs; `replay` reloads the dump and recomputes a CSV, which must match the
//! baseline byte for byte.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rcp_core::paths::crossing_report;
use rcp_core::{build_sample, dump, evolve, Configuration, GraphicalSample, SeedSpec, SpaceTimeBox};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{cell, checksummed, sha256_hex, write_atomic, write_json_atomic, Table};

pub const DUMP_FILE: &str = "sample.rcpg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayCommand {
    /// Event history of the process started from the origin.
    Evolve,
    /// Crossing flags of the sample's own box.
    Crossings,
}

impl ReplayCommand {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve.csv",
            Self::Crossings => "crossings.csv",
        }
    }
}

/// The origin when the box contains it, otherwise every site.
fn initial_set(sample: &GraphicalSample) -> CliResult<Configuration> {
    let b = &sample.bbox;
    let origin = vec![0; b.dim()];
    if b.contains_site(&origin) {
        Ok(Configuration::from_sites(b, &[origin])?)
    } else {
        Ok(Configuration::full(b.num_sites()))
    }
}

/// CSV bytes of `command` on `sample`, checksum line included.
pub fn replay_bytes(sample: &GraphicalSample, command: ReplayCommand) -> CliResult<Vec<u8>> {
    match command {
        ReplayCommand::Evolve => {
            let history = evolve(sample, &initial_set(sample)?, sample.bbox.t)?;
            Ok(checksummed(history.to_csv().into_bytes()))
        }
        ReplayCommand::Crossings => {
            let r = crossing_report(sample, &sample.bbox)?;
            let mut table = Table::new(&["direction", "temporal", "temporal_half", "spatial", "spatial_half"]);
            for j in 0..sample.bbox.dim() {
                table.push(vec![
                    cell(j),
                    cell(r.temporal),
                    cell(r.temporal_half),
                    cell(r.spatial[j]),
                    cell(r.spatial_half[j]),
                ]);
            }
            table.render()
        }
    }
}

/// Builds the sample described by `config`: box `[-radius, radius]^d x [0, horizon]`.
pub fn sample_from_config(config: &ExperimentConfig, seed: u64) -> CliResult<GraphicalSample> {
    let law = config.law()?;
    let horizon = config.positive("horizon", Some(config.horizon.unwrap_or(10.0)))?;
    let bbox = SpaceTimeBox::centered(config.dimension()?, config.radius(5)?, 0.0, horizon)?;
    Ok(build_sample(&bbox, config.lambda()?, law, SeedSpec::new(seed))?)
}

/// Files written by [`write_sample`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleArtifacts {
    pub dump: PathBuf,
    pub evolve: PathBuf,
    pub crossings: PathBuf,
    pub sidecar: PathBuf,
}

pub fn write_sample(
    sample: &GraphicalSample,
    out: &Path,
    config: &ExperimentConfig,
    seed: u64,
) -> CliResult<SampleArtifacts> {
    let mut dump_bytes = Vec::new();
    dump::write_sample(sample, &mut dump_bytes)?;
    let evolve_bytes = replay_bytes(sample, ReplayCommand::Evolve)?;
    let crossing_bytes = replay_bytes(sample, ReplayCommand::Crossings)?;
    let paths = SampleArtifacts {
        dump: out.join(DUMP_FILE),
        evolve: out.join(ReplayCommand::Evolve.file_name()),
        crossings: out.join(ReplayCommand::Crossings.file_name()),
        sidecar: out.join("sample.json"),
    };
    write_atomic(&paths.dump, &dump_bytes)?;
    write_atomic(&paths.evolve, &evolve_bytes)?;
    write_atomic(&paths.crossings, &crossing_bytes)?;
    let mut echo = config.clone();
    echo.seed = Some(seed);
    write_json_atomic(
        &paths.sidecar,
        &serde_json::json!({
            "provenance": crate::provenance(&echo),
            "dump_sha256": sha256_hex(&dump_bytes),
            "evolve_sha256": sha256_hex(&evolve_bytes),
            "crossings_sha256": sha256_hex(&crossing_bytes),
            "config": echo,
        }),
    )?;
    Ok(paths)
}

/// Reloads `dump_path` and writes the CSV of `command` into `out`.
pub fn replay(dump_path: &Path, command: ReplayCommand, out: &Path) -> CliResult<PathBuf> {
    let sample = dump::load(dump_path).map_err(|e| match e {
        rcp_core::RcpError::Io(io) => CliError::io(dump_path, io),
        other => CliError::Core(other),
    })?;
    let bytes = replay_bytes(&sample, command)?;
    let path = out.join(command.file_name());
    write_atomic(&path, &bytes)?;
    Ok(path)
}
