//! Conditional law of the origin given the cure marks.
//!
//! Cure tracks are frozen per field and transmissions are resampled, which
//! conditions on the renewal sigma-field; survival is replaced by being
//! alive at time `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimateResult;
use crate::error::{domain, Result};
use crate::graphical::{GraphicalSample, SpaceTimeBox};
use crate::paths::{config_at, Configuration};
use crate::renewal::{generate_track, InterarrivalLaw, RenewalTrack};
use crate::seed::{derive_seed, rng_for, tag};

/// Outcome of resampling transmissions around fixed cure tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthyFraction {
    pub replicates: u64,
    /// Runs with at least one infected site at `t`.
    pub alive: u64,
    /// Alive runs with the origin healthy at `t`.
    pub healthy: u64,
    /// `healthy / alive`, absent when no run survived.
    pub estimate: Option<EstimateResult>,
}

/// Starts from `{origin}` at time `bbox.s` and resamples transmissions
/// `replicates` times around the given cure tracks (one per site).
pub fn conditional_healthy_fraction(
    bbox: &SpaceTimeBox,
    lambda: f64,
    cures: &[RenewalTrack],
    origin: &[i64],
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<HealthyFraction> {
    if replicates == 0 {
        return domain("at least one replicate is required");
    }
    if !(t > bbox.s && t <= bbox.t) {
        return domain(format!("time {t} must lie in ({}, {}]", bbox.s, bbox.t));
    }
    let Some(oi) = bbox.site_index(origin) else {
        return domain(format!("origin {origin:?} outside the box"));
    };
    let initial = Configuration::from_sites(bbox, &[origin.to_vec()])?;
    let outcomes: Vec<(bool, bool)> = (0..replicates)
        .into_par_iter()
        .map(|p| {
            let trans_seed = derive_seed(seed, tag::TRANSMISSION, &[p as i64]);
            let sample = GraphicalSample::with_frozen_cures(bbox, lambda, cures.to_vec(), trans_seed)?;
            let xi = config_at(&sample, &initial, bbox.s, t)?;
            Ok((!xi.is_empty(), !xi.is_empty() && !xi.contains(oi)))
        })
        .collect::<Result<_>>()?;
    let alive = outcomes.iter().filter(|o| o.0).count() as u64;
    let healthy = outcomes.iter().filter(|o| o.1).count() as u64;
    Ok(HealthyFraction {
        replicates: replicates as u64,
        alive,
        healthy,
        estimate: (alive > 0).then(|| EstimateResult::from_counts(healthy, alive)),
    })
}

/// One frozen cure field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGap {
    pub field: usize,
    /// Age `Y_t(0)` of the origin's cure track.
    pub age: f64,
    pub alive: u64,
    pub p_healthy: Option<f64>,
    /// `exp(-2 d lambda Y_t(0))`.
    pub target: f64,
    /// `|p_healthy - target|`.
    pub gap: Option<f64>,
    /// `p_healthy - exp(-(2d - k) lambda Y_t(0))`.
    pub signed_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminismReport {
    pub fields: Vec<FieldGap>,
    /// Mean of the defined gaps.
    pub mean_gap: Option<f64>,
    pub mean_signed_gap: Option<f64>,
    /// Fields with no run alive at `t`, excluded from the means.
    pub undefined_fields: usize,
}

/// Freezes `fields` independent cure fields on `[-radius, radius]^d x [0, t]`
/// and reruns `replicates` transmission fields for each.
#[allow(clippy::too_many_arguments)]
pub fn estimate_conditional_determinism(
    law: &InterarrivalLaw,
    lambda: f64,
    d: usize,
    t: f64,
    radius: i64,
    fields: usize,
    replicates: usize,
    k: usize,
    seed: u64,
) -> Result<DeterminismReport> {
    if fields == 0 || replicates == 0 {
        return domain("field and replicate counts must be at least 1");
    }
    if k > 2 * d {
        return domain(format!("neighbour count k = {k} exceeds 2d = {}", 2 * d));
    }
    law.validate()?;
    let bbox = SpaceTimeBox::centered(d, radius, 0.0, t)?;
    let origin = vec![0; d];
    let oi = bbox.site_index(&origin).expect("origin is inside a centred box");
    let gaps: Vec<FieldGap> = (0..fields)
        .into_par_iter()
        .map(|r| {
            let field_seed = derive_seed(seed, tag::FIELD, &[r as i64]);
            let cures: Vec<RenewalTrack> = (0..bbox.num_sites())
                .map(|i| generate_track(law, 0.0, t, &mut rng_for(field_seed, tag::CURE, &bbox.site_coords(i))))
                .collect::<Result<_>>()?;
            let age = cures[oi].age_overshoot_at(t)?.age;
            let frac = conditional_healthy_fraction(&bbox, lambda, &cures, &origin, t, replicates, field_seed)?;
            let p = frac.estimate.map(|e| e.estimate);
            let target = (-2.0 * d as f64 * lambda * age).exp();
            let signed_target = (-((2 * d - k) as f64) * lambda * age).exp();
            Ok(FieldGap {
                field: r,
                age,
                alive: frac.alive,
                p_healthy: p,
                target,
                gap: p.map(|p| (p - target).abs()),
                signed_gap: p.map(|p| p - signed_target),
            })
        })
        .collect::<Result<_>>()?;
    let defined: Vec<&FieldGap> = gaps.iter().filter(|g| g.gap.is_some()).collect();
    let mean = |f: &dyn Fn(&FieldGap) -> f64| {
        (!defined.is_empty()).then(|| defined.iter().map(|g| f(g)).sum::<f64>() / defined.len() as f64)
    };
    let mean_gap = mean(&|g| g.gap.unwrap_or(0.0));
    let mean_signed_gap = mean(&|g| g.signed_gap.unwrap_or(0.0));
    Ok(DeterminismReport { undefined_fields: gaps.len() - defined.len(), fields: gaps, mean_gap, mean_signed_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_closed_form() {
        // Site 0 starts infected and is cured at 1; site 1 is never cured.
        // Alive at t = 2 means 0 -> 1 fired before time 1; the origin is then
        // healthy at t iff 1 -> 0 stays silent on (1, 2]: probability e^-1.
        let bbox = SpaceTimeBox::new(vec![0], vec![1], 0.0, 2.0).unwrap();
        let cures = vec![
            RenewalTrack::from_marks(0.0, vec![1.0], 2.0).unwrap(),
            RenewalTrack::from_marks(0.0, vec![], 2.0).unwrap(),
        ];
        let f = conditional_healthy_fraction(&bbox, 1.0, &cures, &[0], 2.0, 20_000, 17).unwrap();
        let est = f.estimate.unwrap();
        let exact = (-1.0f64).exp();
        assert!((est.estimate - exact).abs() <= 2.0 * est.half_width(), "{est:?} vs {exact}");
        // Survival itself has probability 1 - e^-1.
        let alive = f.alive as f64 / f.replicates as f64;
        assert!((alive - (1.0 - exact)).abs() < 0.02);
    }

    #[test]
    fn unmarked_origin_with_large_lambda_is_infected() {
        let law = InterarrivalLaw::deterministic(100.0).unwrap();
        let rep = estimate_conditional_determinism(&law, 3.0, 1, 10.0, 3, 2, 50, 0, 4).unwrap();
        for g in &rep.fields {
            assert_eq!(g.age, 10.0);
            assert_eq!(g.p_healthy, Some(0.0));
            assert!(g.target < 1e-20);
        }
    }

    #[test]
    fn no_survivors_is_undefined() {
        let law = InterarrivalLaw::deterministic(1.0).unwrap();
        let rep = estimate_conditional_determinism(&law, 0.0, 1, 5.0, 2, 3, 5, 0, 1).unwrap();
        assert_eq!(rep.undefined_fields, 3);
        assert_eq!(rep.mean_gap, None);
    }
}
