//! Renewal-theoretic diagnostics: the moment function, gap probabilities,
//! the renewal measure, epsilon-blocks and the negligibility integral.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tail::{segment_bounds, NumericsConfig};
use super::{InterarrivalLaw, RenewalTrack};
use crate::error::{domain, RcpError, Result};
use crate::quadrature::integrate;
use crate::seed::{derive_seed, rng_for, tag};
use crate::stats::{mean_interval, wilson, Interval, Z95};

/// `f(x) = exp(theta sqrt(ln x))` for `x >= 1`, zero below.
pub fn moment_function_f(x: f64, theta: f64) -> f64 {
    if x < 1.0 {
        0.0
    } else {
        (theta * x.ln().sqrt()).exp()
    }
}

/// Natural log of the moment function, for arguments given by their log.
pub fn ln_moment_function_f(ln_x: f64, theta: f64) -> f64 {
    if ln_x < 0.0 {
        f64::NEG_INFINITY
    } else {
        theta * ln_x.sqrt()
    }
}

/// Smallest admissible moment exponent in dimension `d`: `sqrt(8 d ln 2)`.
pub fn theta_min(d: usize) -> f64 {
    (8.0 * d as f64 * std::f64::consts::LN_2).sqrt()
}

/// Fraction of renewal processes started at `start` with no mark in
/// `[t, t + u]`, with a Wilson interval. Trial `i` uses its own stream
/// derived from `seed`, so the result is independent of thread count.
pub fn gap_probability_estimate(
    law: &InterarrivalLaw,
    start: f64,
    t: f64,
    u: f64,
    trials: usize,
    seed: u64,
) -> Result<Interval> {
    if !(u > 0.0) || trials == 0 || !(start <= 0.0) || !(t >= start) {
        return domain(format!(
            "gap probability needs u > 0, trials >= 1 and start <= 0 <= t (u={u}, trials={trials}, start={start}, t={t})"
        ));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, tag::TRIAL, &[i as i64]);
            let mut s = start;
            while s < t {
                s += law.sample(&mut rng);
            }
            u64::from(s > t + u)
        })
        .sum();
    Ok(wilson(hits, trials as u64, Z95))
}

/// One grid point of a moment-constant fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub t: f64,
    pub u: f64,
    pub gap: Interval,
    /// `gap.estimate * f(u, theta)`.
    pub scaled: f64,
}

/// Empirical moment constant: the largest `P(no mark in [t, t+u]) f(u, theta)`
/// over the grid, with every grid point kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    pub theta: f64,
    pub c_moment: f64,
    pub points: Vec<GapPoint>,
}

/// Fits `C` in `P(no mark in [t, t+u]) <= C / f(u, theta)` by taking the
/// maximum of the scaled gap estimates over `ts x us`. Point `(i, j)` uses
/// its own seed derived from `seed`.
pub fn fit_moment_constant(
    law: &InterarrivalLaw,
    theta: f64,
    start: f64,
    ts: &[f64],
    us: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MomentFit> {
    if ts.is_empty() || us.is_empty() {
        return domain("moment fit needs non-empty t and u grids");
    }
    if !(theta > 0.0) {
        return domain(format!("theta must be positive, got {theta}"));
    }
    let mut points = Vec::with_capacity(ts.len() * us.len());
    for (j, &u) in us.iter().enumerate() {
        for (i, &t) in ts.iter().enumerate() {
            let s = derive_seed(seed, tag::TRIAL, &[i as i64, j as i64]);
            let gap = gap_probability_estimate(law, start, t, u, trials, s)?;
            points.push(GapPoint { t, u, gap, scaled: gap.estimate * moment_function_f(u, theta) });
        }
    }
    let c_moment = points.iter().map(|p| p.scaled).fold(0.0, f64::max);
    Ok(MomentFit { theta, c_moment, points })
}

/// Mean number of renewals in `(x, x + h]`, with a normal interval.
pub fn renewal_measure_estimate(law: &InterarrivalLaw, x: f64, h: f64, trials: usize, seed: u64) -> Result<Interval> {
    if !(x >= 0.0) || !(h > 0.0) || trials == 0 {
        return domain(format!("renewal measure needs x >= 0, h > 0, trials >= 1 (x={x}, h={h})"));
    }
    let counts: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, tag::TRIAL, &[i as i64]);
            let mut s = 0.0;
            let mut c = 0u64;
            loop {
                s += law.sample(&mut rng);
                if s > x + h {
                    break;
                }
                if s > x {
                    c += 1;
                }
            }
            c as f64
        })
        .collect();
    Ok(mean_interval(&counts, Z95))
}

/// Whether every mark-free stretch of `[a, b]` is shorter than `eps`.
///
/// The start of the track counts as a mark; the stretches from `a` to the
/// first mark and from the last mark to `b` are included.
pub fn is_epsilon_block(track: &RenewalTrack, a: f64, b: f64, eps: f64) -> Result<bool> {
    if a > b {
        return domain(format!("epsilon-block interval inverted: [{a}, {b}]"));
    }
    let mut prev = a;
    let mut points: Vec<f64> = Vec::new();
    if track.start >= a && track.start <= b {
        points.push(track.start);
    }
    points.extend(track.marks.iter().copied().filter(|&m| m >= a && m <= b));
    for p in points {
        if p - prev >= eps {
            return Ok(false);
        }
        prev = p;
    }
    Ok(b - prev < eps)
}

/// Value of the negligibility integral and its ratio to `tail(t) / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negligibility {
    pub value: f64,
    pub ratio: f64,
}

/// `int_1^{delta t} f(t - z) / (z tail(z)^2) dz` for a law with density `f`.
pub fn negligibility_integral(
    law: &InterarrivalLaw,
    delta: f64,
    t: f64,
    cfg: &NumericsConfig,
) -> Result<Negligibility> {
    if law.density(1.0).is_none() {
        return Err(RcpError::UnsupportedLaw(format!("{} has no density", law.label())));
    }
    if !(delta > 0.0 && delta < 1.0) || !(t > 0.0) {
        return domain(format!("negligibility integral needs delta in (0,1) and t > 0 (delta={delta}, t={t})"));
    }
    let upper = delta * t;
    if upper <= 1.0 {
        return Ok(Negligibility { value: 0.0, ratio: 0.0 });
    }
    let kinks: Vec<f64> = law.breakpoints().into_iter().map(|b| t - b).collect();
    let mut value = 0.0;
    for (a, b) in segment_bounds(1.0, upper, &kinks) {
        let g = |v: f64| {
            let z = v.exp();
            let tail = law.tail(z);
            law.density(t - z).unwrap_or(0.0) / (tail * tail)
        };
        let q = integrate(g, a.ln(), b.ln(), 0.0, cfg.negligibility_rel_tol * 0.1, cfg.max_segments);
        if !q.converged && q.abs_error > cfg.negligibility_rel_tol * q.value.abs() {
            return Err(RcpError::NoSolution(format!("negligibility quadrature over [{a}, {b}] did not converge")));
        }
        value += q.value;
    }
    Ok(Negligibility { value, ratio: value / (law.tail(t) / t) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::generate_track;
    use approx::assert_relative_eq;

    #[test]
    fn moment_function_values() {
        assert_eq!(moment_function_f(1.0, 2.5), 1.0);
        assert_eq!(moment_function_f(0.5, 2.5), 0.0);
        assert_relative_eq!(moment_function_f(4f64.exp(), 2.5), 5f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(theta_min(2), 3.330_218, epsilon = 1e-6);
    }

    #[test]
    fn epsilon_blocks() {
        let tr = RenewalTrack::from_marks(0.0, (1..10).map(|i| i as f64 / 10.0).collect(), 2.0).unwrap();
        assert!(is_epsilon_block(&tr, 0.0, 1.0, 0.15).unwrap());
        let empty = RenewalTrack::from_marks(-1.0, vec![], 2.0).unwrap();
        assert!(!is_epsilon_block(&empty, 0.0, 1.0, 0.5).unwrap());
        let one = RenewalTrack::from_marks(-1.0, vec![0.3], 2.0).unwrap();
        assert!(is_epsilon_block(&one, 0.0, 1.0, 0.71).unwrap());
        assert!(!is_epsilon_block(&one, 0.0, 1.0, 0.69).unwrap());
        assert!(is_epsilon_block(&one, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn gap_probability_closed_forms() {
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        let ci = gap_probability_estimate(&d, 0.0, 0.1, 2.0, 500, 1).unwrap();
        assert_eq!(ci.estimate, 0.0);
        let e = InterarrivalLaw::exponential(1.0).unwrap();
        let ci = gap_probability_estimate(&e, 0.0, 50.0, 1.0, 20_000, 2).unwrap();
        let target = (-1.0f64).exp();
        assert!(ci.lo - 0.005 <= target && target <= ci.hi + 0.005, "{ci:?}");
    }

    #[test]
    fn renewal_measure_closed_forms() {
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        let ci = renewal_measure_estimate(&d, 2.5, 1.0, 100, 1).unwrap();
        assert_eq!(ci.estimate, 1.0);
        let e = InterarrivalLaw::exponential(1.0).unwrap();
        let ci = renewal_measure_estimate(&e, 5.0, 1.0, 20_000, 3).unwrap();
        assert!((ci.estimate - 1.0).abs() < 3.0 * ci.half_width(), "{ci:?}");
    }

    #[test]
    fn negligibility_requires_density() {
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        assert!(matches!(
            negligibility_integral(&d, 0.1, 100.0, &NumericsConfig::default()),
            Err(RcpError::UnsupportedLaw(_))
        ));
        let p = InterarrivalLaw::pareto_tail(0.3, 1.0).unwrap();
        let r = negligibility_integral(&p, 0.1, 5.0, &NumericsConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn track_and_block_agree_on_generated_tracks() {
        let law = InterarrivalLaw::exponential(5.0).unwrap();
        let mut rng = rng_for(5, tag::CURE, &[]);
        let tr = generate_track(&law, 0.0, 10.0, &mut rng).unwrap();
        let max_gap =
            tr.marks.windows(2).map(|w| w[1] - w[0]).fold(tr.marks[0], f64::max).max(10.0 - tr.marks.last().unwrap());
        assert!(is_epsilon_block(&tr, 0.0, 10.0, max_gap * 1.0001).unwrap());
        assert!(!is_epsilon_block(&tr, 0.0, 10.0, max_gap * 0.9999).unwrap());
    }
}
