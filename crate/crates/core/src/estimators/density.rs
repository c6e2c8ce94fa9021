//! Fraction of surviving runs that fill a window around the origin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimateResult, MonteCarloConfig};
use crate::error::{domain, Result};
use crate::graphical::{build_sample_with, BuildOptions, SeedSpec, SpaceTimeBox};
use crate::paths::{config_at, Configuration};

/// Initially infected set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Only the origin.
    #[default]
    Origin,
    /// Every site of the window.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// Among runs alive at `t`, the fraction infected on the whole window.
    /// Absent when no run survived.
    pub conditional: Option<EstimateResult>,
    pub dead: EstimateResult,
    /// Alive at `t` and infected on the whole window.
    pub alive_and_full: EstimateResult,
    pub alive: u64,
}

/// Window `[-window, window]^d` at time `t` on the lattice box of radius
/// `config.radius`; `config.horizon` is ignored.
pub fn estimate_density_window(
    config: &MonteCarloConfig,
    lambda: f64,
    window: i64,
    t: f64,
    initial: InitialCondition,
) -> Result<DensityEstimate> {
    config.validate()?;
    if !(0..=config.radius).contains(&window) {
        return domain(format!("window radius {window} must lie in [0, {}]", config.radius));
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    let bbox = SpaceTimeBox::centered(config.d, config.radius, 0.0, t)?;
    let region = SpaceTimeBox::centered(config.d, window, 0.0, t)?;
    let window_sites: Vec<usize> =
        (0..bbox.num_sites()).filter(|&i| region.contains_site(&bbox.site_coords(i))).collect();
    let start = match initial {
        InitialCondition::Origin => Configuration::from_sites(&bbox, &[vec![0; config.d]])?,
        InitialCondition::Window => Configuration::from_region(&bbox, &region),
    };
    let opts = BuildOptions { max_marks: config.max_marks, ..BuildOptions::default() };
    let outcomes: Vec<(bool, bool)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let sample = build_sample_with(&bbox, lambda, &config.law, SeedSpec::new(config.trial_seed(i)), &opts)?;
            let xi = config_at(&sample, &start, 0.0, t)?;
            let alive = !xi.is_empty();
            Ok((alive, alive && window_sites.iter().all(|&s| xi.contains(s))))
        })
        .collect::<Result<_>>()?;
    let trials = config.trials as u64;
    let alive = outcomes.iter().filter(|o| o.0).count() as u64;
    let full = outcomes.iter().filter(|o| o.1).count() as u64;
    Ok(DensityEstimate {
        conditional: (alive > 0).then(|| EstimateResult::from_counts(full, alive)),
        dead: EstimateResult::from_counts(trials - alive, trials),
        alive_and_full: EstimateResult::from_counts(full, trials),
        alive,
    })
}
