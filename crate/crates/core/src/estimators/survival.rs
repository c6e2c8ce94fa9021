//! Horizon-censored survival from a single infected site.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimateResult, MonteCarloConfig};
use crate::error::{domain, Result};
use crate::graphical::{build_sample_with, BuildOptions, SeedSpec, SpaceTimeBox};
use crate::paths::{run_survival, Configuration, SurvivalRun};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub lambda: f64,
    pub result: EstimateResult,
}

fn check_grid(lambdas: &[f64]) -> Result<f64> {
    if lambdas.is_empty() {
        return domain("at least one transmission rate is required");
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return domain(format!("transmission rates must be finite and >= 0, got {lambdas:?}"));
    }
    Ok(lambdas.iter().copied().fold(0.0, f64::max))
}

/// Runs of one trial at every rate in `lambdas`.
///
/// All rates share the trial's seed and are thinned from the largest rate,
/// so a run at a larger rate sees a superset of the transmission marks.
pub fn survival_runs(config: &MonteCarloConfig, lambdas: &[f64], trial: usize) -> Result<Vec<SurvivalRun>> {
    config.validate()?;
    let ceiling = check_grid(lambdas)?;
    let bbox = SpaceTimeBox::centered(config.d, config.radius, 0.0, config.horizon)?;
    let origin = Configuration::from_sites(&bbox, &[vec![0; config.d]])?;
    let seed = SeedSpec::new(config.trial_seed(trial));
    let opts = BuildOptions { lambda_ceiling: Some(ceiling), max_marks: config.max_marks, ..BuildOptions::default() };
    lambdas
        .iter()
        .map(|&lambda| {
            let sample = build_sample_with(&bbox, lambda, &config.law, seed, &opts)?;
            run_survival(&sample, &origin, config.horizon)
        })
        .collect()
}

/// Fraction of trials alive at the horizon, per transmission rate.
///
/// Trials whose infection touched the boundary count as alive and are
/// reported in `boundary_hits`.
pub fn estimate_survival(config: &MonteCarloConfig, lambdas: &[f64]) -> Result<Vec<SurvivalEstimate>> {
    config.validate()?;
    check_grid(lambdas)?;
    let runs: Vec<Vec<SurvivalRun>> =
        (0..config.trials).into_par_iter().map(|i| survival_runs(config, lambdas, i)).collect::<Result<_>>()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let alive = runs.iter().filter(|r| r[j].survival.survived()).count() as u64;
            let flagged = runs.iter().filter(|r| r[j].survival.survived() && r[j].boundary_hit).count() as u64;
            let mut result = EstimateResult::from_counts(alive, config.trials as u64);
            result.boundary_hits = flagged;
            result.horizon_hits = alive;
            SurvivalEstimate { lambda, result }
        })
        .collect())
}
