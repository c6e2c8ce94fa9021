//! Monotone coupling of two renewal processes by hazard thinning.
//!
//! One planar Poisson point set of height `sup h_nu` is shared. A point
//! `(t, y)` is a renewal of a process whose current age is `a` when
//! `y <= h(a)`, and that process's clock restarts at `t`. When the dominating
//! hazard is large enough, every accepted point for `mu` is also accepted for
//! `nu`, so the `mu` marks are a subset of the `nu` marks.

use rand::RngCore;

use super::{InterarrivalLaw, RenewalTrack};
use crate::error::{domain, precondition, Result};
use crate::seed::{exponential, open01};

const GRID_POINTS: usize = 1000;

/// Checks that thinning under `nu` contains thinning under `mu` for ages up
/// to `max_age`.
///
/// Pointwise dominance is tested on a log-spaced grid. Inclusion also needs
/// the smaller hazard to be non-increasing, or the larger one to stay above
/// the supremum of the smaller one; one of the two must hold.
pub fn check_hazard_dominance(mu: &InterarrivalLaw, nu: &InterarrivalLaw, max_age: f64) -> Result<f64> {
    if mu.hazard(1.0).is_none() || nu.hazard(1.0).is_none() {
        return precondition("both laws need hazard rates for a thinning coupling");
    }
    let Some(height) = nu.hazard_sup() else {
        return precondition(format!("hazard of {} is unbounded; no finite strip height", nu.label()));
    };
    if !(max_age > 0.0) {
        return domain(format!("coupling needs a positive age range, got {max_age}"));
    }
    let lo = max_age * 1e-6;
    let ratio = (max_age / lo).powf(1.0 / (GRID_POINTS - 1) as f64);
    let mut a = lo;
    let mut inf_nu = f64::INFINITY;
    let mut sup_mu: f64 = 0.0;
    let mut mu_non_increasing = true;
    let mut prev_mu = f64::INFINITY;
    for _ in 0..GRID_POINTS {
        let hm = mu.hazard(a).unwrap_or(f64::INFINITY);
        let hn = nu.hazard(a).unwrap_or(0.0);
        if hn < hm {
            return precondition(format!(
                "hazard of {} ({hn}) is below that of {} ({hm}) at age {a}",
                nu.label(),
                mu.label()
            ));
        }
        inf_nu = inf_nu.min(hn);
        sup_mu = sup_mu.max(hm);
        mu_non_increasing &= hm <= prev_mu;
        prev_mu = hm;
        a *= ratio;
    }
    let sup_mu = mu.hazard_sup().unwrap_or(sup_mu).max(sup_mu);
    if !(mu_non_increasing || inf_nu >= sup_mu) {
        return precondition(format!(
            "hazard of {} is not monotone and inf hazard of {} ({inf_nu}) is below sup hazard of {} ({sup_mu})",
            mu.label(),
            nu.label(),
            mu.label()
        ));
    }
    Ok(height)
}

/// Returns `(track_mu, track_nu)` from `start` to `horizon` with the `mu`
/// marks contained in the `nu` marks. Overshoots beyond the horizon are
/// left unknown.
pub fn hazard_coupled_tracks<R: RngCore + ?Sized>(
    mu: &InterarrivalLaw,
    nu: &InterarrivalLaw,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<(RenewalTrack, RenewalTrack)> {
    if !(start <= 0.0 && horizon > 0.0) {
        return domain(format!("coupling needs start <= 0 < horizon (start={start}, horizon={horizon})"));
    }
    let height = check_hazard_dominance(mu, nu, horizon - start)?;
    let (mut clock_mu, mut clock_nu) = (start, start);
    let (mut marks_mu, mut marks_nu) = (Vec::new(), Vec::new());
    let mut t = start;
    loop {
        t += exponential(rng, height);
        if t > horizon {
            break;
        }
        let y = height * open01(rng);
        let take_nu = y <= nu.hazard(t - clock_nu).unwrap_or(0.0);
        let take_mu = y <= mu.hazard(t - clock_mu).unwrap_or(0.0);
        if take_mu && !take_nu {
            return precondition(format!("thinning inclusion failed at t={t}; hazards are not ordered there"));
        }
        if take_nu {
            marks_nu.push(t);
            clock_nu = t;
        }
        if take_mu {
            marks_mu.push(t);
            clock_mu = t;
        }
    }
    Ok((
        RenewalTrack { start, marks: marks_mu, horizon, next: None },
        RenewalTrack { start, marks: marks_nu, horizon, next: None },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_for, tag};

    #[test]
    fn equal_hazards_give_identical_tracks() {
        let e = InterarrivalLaw::exponential(1.0).unwrap();
        let mut rng = rng_for(1, tag::COUPLING, &[]);
        let (a, b) = hazard_coupled_tracks(&e, &e, 0.0, 50.0, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reversed_dominance_is_rejected() {
        let slow = InterarrivalLaw::exponential(1.0).unwrap();
        let fast = InterarrivalLaw::exponential(2.0).unwrap();
        let mut rng = rng_for(1, tag::COUPLING, &[]);
        assert!(hazard_coupled_tracks(&fast, &slow, 0.0, 10.0, &mut rng).is_err());
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        assert!(hazard_coupled_tracks(&d, &fast, 0.0, 10.0, &mut rng).is_err());
    }

    #[test]
    fn subset_holds_for_ordered_exponentials() {
        let slow = InterarrivalLaw::exponential(1.0).unwrap();
        let fast = InterarrivalLaw::exponential(2.0).unwrap();
        for i in 0..1000 {
            let mut rng = rng_for(2, tag::COUPLING, &[i]);
            let (a, b) = hazard_coupled_tracks(&slow, &fast, 0.0, 20.0, &mut rng).unwrap();
            assert!(a.marks.iter().all(|m| b.marks.binary_search_by(|x| x.total_cmp(m)).is_ok()));
        }
    }
}
