//! Overshoot exceedance against its limiting value `1 - theta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, EstimateResult};
use crate::error::{domain, Result};
use crate::renewal::{integrated_tail_m, inverse_integrated_tail, InterarrivalLaw};
use crate::seed::{rng_for, tag};

/// Marks drawn per trial before the overshoot is treated as censored.
const MAX_MARKS_PER_TRIAL: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EricksonResult {
    pub t: f64,
    pub theta: f64,
    /// `m^{-1}(theta m(t))`.
    pub threshold: f64,
    /// Fraction of trials with overshoot beyond the threshold.
    pub estimate: EstimateResult,
    pub target: f64,
    pub abs_diff: f64,
    /// Trials stopped by the mark budget; counted as exceedances.
    pub censored: u64,
}

/// Monte Carlo of `P(Z_t > m^{-1}(theta m(t)))` for a renewal process
/// started at 0, where `Z_t` is the time from `t` to the next mark.
pub fn erickson_check(law: &InterarrivalLaw, t: f64, theta: f64, trials: usize, seed: u64) -> Result<EricksonResult> {
    if !(theta > 0.0 && theta < 1.0) {
        return domain(format!("theta must lie in (0, 1), got {theta}"));
    }
    if !(t > 0.0 && t.is_finite()) || trials == 0 {
        return domain(format!("need t > 0 and trials >= 1 (t = {t}, trials = {trials})"));
    }
    law.validate()?;
    let threshold = inverse_integrated_tail(law, theta * integrated_tail_m(law, t)?)?;
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(trial_seed(seed, i), tag::CURE, &[0]);
            let mut s = 0.0;
            for _ in 0..MAX_MARKS_PER_TRIAL {
                s += law.sample(&mut rng);
                if s > t {
                    return (s - t > threshold, false);
                }
            }
            (true, true)
        })
        .collect();
    let hits = outcomes.iter().filter(|o| o.0).count() as u64;
    let censored = outcomes.iter().filter(|o| o.1).count() as u64;
    let estimate = EstimateResult::from_counts(hits, trials as u64);
    let target = 1.0 - theta;
    Ok(EricksonResult { t, theta, threshold, estimate, target, abs_diff: (estimate.estimate - target).abs(), censored })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_overshoot_is_exact() {
        // Marks at the integers: Z at t = 10.3 is 0.7, and m^{-1}(theta) = theta.
        let law = InterarrivalLaw::deterministic(1.0).unwrap();
        let r = erickson_check(&law, 10.3, 0.5, 50, 1).unwrap();
        assert!((r.threshold - 0.5).abs() < 1e-9);
        assert_eq!(r.estimate.estimate, 1.0);
        let r = erickson_check(&law, 10.3, 0.8, 50, 1).unwrap();
        assert_eq!(r.estimate.estimate, 0.0);
    }

    #[test]
    fn small_theta_gives_near_certain_exceedance() {
        let law = InterarrivalLaw::pareto_tail(0.7, 1.0).unwrap();
        let r = erickson_check(&law, 100.0, 1e-6, 2000, 3).unwrap();
        assert!(r.estimate.estimate > 0.99);
    }

    #[test]
    fn rejects_theta_outside_unit_interval() {
        let law = InterarrivalLaw::exponential(1.0).unwrap();
        assert!(erickson_check(&law, 10.0, 1.0, 10, 0).is_err());
        assert!(erickson_check(&law, 10.0, 0.0, 10, 0).is_err());
    }
}
