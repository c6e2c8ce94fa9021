//! Crossing probabilities of the boxes `[0, 2^n]^d x [0, b_n]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimateResult, MonteCarloConfig};
use crate::error::{domain, RcpError, Result};
use crate::graphical::{build_sample_with, BuildOptions, SeedSpec, SpaceTimeBox};
use crate::paths::{detect_spatial_crossing, detect_temporal_crossing};
use crate::renorm::{derive_constants, ScaleSchedule};

/// Estimates of the four crossing probabilities at one scale.
///
/// `s` and `h` use direction 0; the laws of the other directions are the
/// same by symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimates {
    pub n: u32,
    pub ln_b_n: f64,
    /// Full temporal crossing.
    pub t: EstimateResult,
    /// Temporal crossing of the lower half of the time window.
    pub t_half: EstimateResult,
    /// Spatial crossing of the whole box.
    pub s: EstimateResult,
    /// Spatial crossing of the half box next to the far face.
    pub h: EstimateResult,
    /// Trials with a full temporal crossing but no half crossing. Always 0
    /// unless the detectors disagree.
    pub containment_violations: u64,
}

/// `config.horizon` and `config.radius` are ignored; the box is fixed by
/// `n` and `theta`.
pub fn estimate_crossing_probs(
    n: u32,
    theta: f64,
    lambda: f64,
    config: &MonteCarloConfig,
) -> Result<CrossingEstimates> {
    if config.trials == 0 || config.d == 0 {
        return domain("crossing estimates need trials >= 1 and d >= 1");
    }
    config.law.validate()?;
    let schedule = ScaleSchedule::new(derive_constants(config.d, theta)?);
    let ln_b = schedule.ln_b(n);
    if ln_b > 40.0 || n > 40 {
        return Err(RcpError::Capacity(format!("box at scale {n} has ln b_n = {ln_b:.3}, too large to sample")));
    }
    let side = 1i64 << n;
    let bbox = SpaceTimeBox::new(vec![0; config.d], vec![side; config.d], 0.0, ln_b.exp())?;
    let opts = BuildOptions { max_marks: config.max_marks, ..BuildOptions::default() };
    let flags: Vec<[bool; 4]> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let sample = build_sample_with(&bbox, lambda, &config.law, SeedSpec::new(config.trial_seed(i)), &opts)?;
            Ok([
                detect_temporal_crossing(&sample, &bbox, false)?,
                detect_temporal_crossing(&sample, &bbox, true)?,
                detect_spatial_crossing(&sample, &bbox, 0, false)?,
                detect_spatial_crossing(&sample, &bbox, 0, true)?,
            ])
        })
        .collect::<Result<_>>()?;
    let count = |k: usize| flags.iter().filter(|f| f[k]).count() as u64;
    let trials = config.trials as u64;
    Ok(CrossingEstimates {
        n,
        ln_b_n: ln_b,
        t: EstimateResult::from_counts(count(0), trials),
        t_half: EstimateResult::from_counts(count(1), trials),
        s: EstimateResult::from_counts(count(2), trials),
        h: EstimateResult::from_counts(count(3), trials),
        containment_violations: flags.iter().filter(|f| f[0] && !f[1]).count() as u64,
    })
}
