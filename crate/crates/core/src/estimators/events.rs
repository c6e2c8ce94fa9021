//! Direct Monte Carlo of the mark-structure events used to control the
//! conditional law of the origin, with their probability bounds.
//!
//! Bounds whose constants are not known take them as parameters
//! (`k_const`, `c_const`); [`fit_cn_constants`] fits them from estimates
//! at smaller scales.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, EstimateResult};
use crate::error::{domain, precondition, RcpError, Result};
use crate::graphical::{build_sample_with, step, BuildOptions, EventKind, GraphicalSample, SeedSpec, SpaceTimeBox};
use crate::renewal::{generate_track, moment_function_f, InterarrivalLaw, RenewalTrack};
use crate::seed::{rng_for, tag};

fn one() -> f64 {
    1.0
}

/// Largest number of sites a single trial may track.
const MAX_SITES: usize = 2_000_000;
/// Work budget, in event visits, for the free-infection search of one trial.
const MAX_FREE_WORK: u64 = 20_000_000_000;

/// Event and its parameters. `B(r)` denotes the cube `[-r, r]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventSpec {
    /// Some site of `[0, 2^n]^d` has no mark in `[t, t + s]`.
    J {
        n: u32,
        t: f64,
        s: f64,
        theta: f64,
        #[serde(default = "one")]
        c_moment: f64,
    },
    /// Distinct `z, z'` in `B(n^3)` and `s` in `[2^n, 2^(n+2)]` with a mark
    /// of `z` in `[s, s+1]` and a mark of `z'` in `[s, s + 2 * 2^(n eps)]`.
    B {
        n: u32,
        eps: f64,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "one")]
        k_const: f64,
    },
    /// As `B` with `m` further distinct sites each marked in the long window.
    Bm {
        n: u32,
        eps: f64,
        m: usize,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "one")]
        k_const: f64,
    },
    /// Some `(x, T)` fails to freely infect some `(y, T + 2^(n eps2))` in
    /// `B(n^3)`, with `[T, T + 2^(n eps2)]` inside `[2^n, 2^(n+2)]`.
    C {
        n: u32,
        eps2: f64,
        lambda: f64,
        #[serde(default = "one")]
        k_const: f64,
        #[serde(default = "one")]
        c_const: f64,
    },
    /// Some site of `B(n^3)` has at least `n^2 2^(n eps g)` marks in a window
    /// of length `2^(n eps)` inside `[2^n, 2^(n+2)]`, `g = 1 - (1 - alpha)/4`.
    D {
        n: u32,
        eps: f64,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "one")]
        k_const: f64,
        #[serde(default = "one")]
        c_const: f64,
    },
    /// Some `t` in `[2^n, 2^(n+1))` with an origin mark in `[t, t+1]`, none in
    /// `[t+1, t+M+1]`, and `[t, t+M+1]` an eps-block for each of the first
    /// `m` neighbours of the origin.
    A {
        n: u32,
        big_m: f64,
        eps: f64,
        m: usize,
        #[serde(default)]
        alpha: Option<f64>,
    },
}

impl EventSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::J { .. } => "J",
            Self::B { .. } => "B",
            Self::Bm { .. } => "Bm",
            Self::C { .. } => "C",
            Self::D { .. } => "D",
            Self::A { .. } => "A",
        }
    }

    pub fn n(&self) -> u32 {
        match *self {
            Self::J { n, .. }
            | Self::B { n, .. }
            | Self::Bm { n, .. }
            | Self::C { n, .. }
            | Self::D { n, .. }
            | Self::A { n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub n: u32,
    pub estimate: EstimateResult,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

fn tail_index(law: &InterarrivalLaw, alpha: Option<f64>, event: &str) -> Result<f64> {
    match alpha.or_else(|| law.tail_index()) {
        Some(a) if a > 0.0 && a < 1.0 => Ok(a),
        Some(a) => precondition(format!("event {event} needs a tail index in (0, 1), got {a}")),
        None => precondition(format!("event {event} needs a tail index; {} has none, pass alpha", law.label())),
    }
}

/// `K 2^(n(1-eps2)) n^(6d) exp(-c 2^(c n eps2))`.
pub fn cn_bound(n: u32, eps2: f64, d: usize, k_const: f64, c_const: f64) -> f64 {
    let n_f = n as f64;
    let ln = k_const.ln() + n_f * (1.0 - eps2) * std::f64::consts::LN_2 + 6.0 * d as f64 * n_f.ln()
        - c_const * (c_const * n_f * eps2 * std::f64::consts::LN_2).exp();
    ln.exp()
}

/// Fits `(K, c)` so that [`cn_bound`] passes through two `(n, p)` points.
pub fn fit_cn_constants(p1: (u32, f64), p2: (u32, f64), eps2: f64, d: usize) -> Result<(f64, f64)> {
    let ((n1, a), (n2, b)) = (p1, p2);
    if n1 >= n2 || !(a > 0.0 && b > 0.0) {
        return domain("fit needs n1 < n2 and positive probabilities");
    }
    let q = |n: u32, p: f64| {
        let n_f = n as f64;
        p.ln() - n_f * (1.0 - eps2) * std::f64::consts::LN_2 - 6.0 * d as f64 * n_f.ln()
    };
    let (q1, q2) = (q(n1, a), q(n2, b));
    let e = |c: f64, n: u32| (c * n as f64 * eps2 * std::f64::consts::LN_2).exp();
    let g = |c: f64| c * (e(c, n2) - e(c, n1)) - (q1 - q2);
    if !(q1 > q2) {
        return Err(RcpError::NoSolution("probabilities do not decay fast enough for a positive c".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(RcpError::NoSolution("no c below 1000 fits the points".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    Ok(((q1 + c * e(c, n1)).exp(), c))
}

fn cube_tracks(law: &InterarrivalLaw, d: usize, r: i64, horizon: f64, seed: u64) -> Result<Vec<RenewalTrack>> {
    let bbox = SpaceTimeBox::centered(d, r, 0.0, horizon)?;
    if bbox.num_sites() > MAX_SITES {
        return Err(RcpError::Capacity(format!("{} sites exceed the budget of {MAX_SITES}", bbox.num_sites())));
    }
    (0..bbox.num_sites())
        .map(|i| generate_track(law, 0.0, horizon, &mut rng_for(seed, tag::CURE, &bbox.site_coords(i))))
        .collect()
}

fn cube_radius(n: u32) -> i64 {
    (n as i64).pow(3)
}

/// Time-sorted `(time, site)` pairs with times in `[lo, hi]`.
fn labelled_marks(tracks: &[RenewalTrack], lo: f64, hi: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = tracks
        .iter()
        .enumerate()
        .flat_map(|(z, tr)| tr.marks.iter().filter(move |&&m| m >= lo && m <= hi).map(move |&m| (m, z)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Whether some site's mark in `[s, s+1]` and `m` other distinct sites'
/// marks in `[s, s+w]` occur together for some `s` in `[lo, hi]`.
fn coincidence(tracks: &[RenewalTrack], lo: f64, hi: f64, w: f64, m: usize) -> bool {
    let marks = labelled_marks(tracks, lo - 1.0, hi + w);
    let others_in = |s: f64, z0: usize| {
        let start = marks.partition_point(|p| p.0 < s);
        let mut seen = HashSet::new();
        for &(time, z) in &marks[start..] {
            if time > s + w {
                break;
            }
            if z != z0 {
                seen.insert(z);
                if seen.len() >= m {
                    return true;
                }
            }
        }
        false
    };
    for &(m0, z0) in &marks {
        let (s_lo, s_hi) = ((m0 - 1.0).max(lo), m0.min(hi));
        if s_lo > s_hi {
            continue;
        }
        // The count of sites in [s, s+w] is maximal at s = s_lo or just at a mark.
        let first = marks.partition_point(|p| p.0 < s_lo);
        let candidates = std::iter::once(s_lo).chain(marks[first..].iter().map(|p| p.0).take_while(|&x| x <= s_hi));
        for s in candidates {
            if others_in(s, z0) {
                return true;
            }
        }
    }
    false
}

/// Largest number of marks of one track in a closed window of length `len`
/// inside `[lo, hi]`.
fn max_window_count(track: &RenewalTrack, lo: f64, hi: f64, len: f64) -> usize {
    let marks = track.marks_in_closed(lo, hi);
    let mut best = 0;
    for &x in marks {
        let left = x.min(hi - len).max(lo);
        let a = marks.partition_point(|&m| m < left);
        let b = marks.partition_point(|&m| m <= left + len);
        best = best.max(b - a);
    }
    best
}

/// Sorts open intervals and merges overlapping ones, dropping empty ones.
fn normalize(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.retain(|i| i.0 < i.1);
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn known_points(track: &RenewalTrack) -> Vec<f64> {
    let mut pts = vec![track.start];
    pts.extend(track.marks.iter().copied());
    pts.extend(track.next);
    pts
}

/// Times `t` with a mark of `track` in `[t, t+1]` and none in `[t+1, t+M+1]`.
fn isolated_mark_times(track: &RenewalTrack, big_m: f64) -> Vec<(f64, f64)> {
    let pts = known_points(track);
    let mut out = Vec::new();
    for (i, &r) in pts.iter().enumerate() {
        let next = pts.get(i + 1).copied().unwrap_or(f64::INFINITY);
        out.push((r - 1.0, r.min(next - big_m - 1.0)));
    }
    normalize(out)
}

/// Times `t` for which `[t, t+w]` is an eps-block of `track` (`w >= eps`).
fn block_times(track: &RenewalTrack, w: f64, eps: f64) -> Vec<(f64, f64)> {
    let pts = known_points(track);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..pts.len() {
        if i + 1 == pts.len() || pts[i + 1] - pts[i] >= eps {
            out.push((pts[start] - eps, pts[i] - w + eps));
            start = i + 1;
        }
    }
    normalize(out)
}

/// Whether the event `A` holds for the origin track and neighbour tracks,
/// with `t` ranging over `[lo, hi)`.
fn block_event(origin: &RenewalTrack, neighbours: &[RenewalTrack], lo: f64, hi: f64, big_m: f64, eps: f64) -> bool {
    let w = big_m + 1.0;
    let mut feasible = intersect(&[(lo, hi)], &isolated_mark_times(origin, big_m));
    for tr in neighbours {
        if feasible.is_empty() {
            break;
        }
        feasible = intersect(&feasible, &block_times(tr, w, eps));
    }
    // The range is closed on the left.
    !feasible.is_empty() || lo_point_ok(origin, neighbours, lo, big_m, eps)
}

fn lo_point_ok(origin: &RenewalTrack, neighbours: &[RenewalTrack], t: f64, big_m: f64, eps: f64) -> bool {
    let w = big_m + 1.0;
    origin.has_mark_in_closed(t, t + 1.0)
        && !origin.has_mark_in_closed(t + 1.0, t + w)
        && neighbours.iter().all(|tr| crate::renewal::is_epsilon_block(tr, t, t + w, eps).unwrap_or(false))
}

/// Whether some `(x, T)` fails to freely infect some `(y, T + w)` inside
/// the sample's box, for `T` in `[lo, hi]`.
fn free_infection_fails(sample: &GraphicalSample, lo: f64, hi: f64, w: f64) -> Result<bool> {
    // Failure at T persists down to the last transmission at or before T,
    // so it suffices to test T = lo and every transmission time in (lo, hi].
    let mut candidates = vec![lo];
    candidates.extend(
        sample
            .events_between(lo, hi)?
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Transmission { .. }))
            .map(|e| e.time),
    );
    candidates.dedup();
    let n = sample.num_sites();
    let mut work = 0u64;
    for &t0 in &candidates {
        let window: Vec<(usize, usize)> = sample
            .events_between(t0, t0 + w)?
            .iter()
            .filter(|e| e.time < t0 + w)
            .filter_map(|e| match e.kind {
                EventKind::Transmission { from, to, .. } => Some((from, to)),
                EventKind::Cure { .. } => None,
            })
            .collect();
        for x in 0..n {
            work += window.len() as u64 + 1;
            if work > MAX_FREE_WORK {
                return Err(RcpError::Capacity("free-infection search exceeded its work budget".into()));
            }
            let mut reached = vec![false; n];
            reached[x] = true;
            let mut count = 1;
            for &(a, b) in &window {
                if reached[a] && !reached[b] {
                    reached[b] = true;
                    count += 1;
                }
            }
            if count < n {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    Ok(())
}

/// Monte Carlo estimate of the event, compared with its bound when one is
/// available.
pub fn estimate_event_prob(
    spec: &EventSpec,
    law: &InterarrivalLaw,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<EventEstimate> {
    check_trials(trials)?;
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    law.validate()?;
    let n = spec.n();
    if n == 0 || n > 30 {
        return domain(format!("scale n must lie in [1, 30], got {n}"));
    }
    let n_f = n as f64;
    let two_n = 2f64.powi(n as i32);
    let (lo, hi) = (two_n, 4.0 * two_n);
    let bound: Option<f64>;
    let event: Box<dyn Fn(u64) -> Result<bool> + Sync> = match *spec {
        EventSpec::J { t, s, theta, c_moment, .. } => {
            if !(t >= 0.0 && s >= 0.0) {
                return domain(format!("event J needs t >= 0 and s >= 0, got t={t}, s={s}"));
            }
            bound = (s > 1.0).then(|| c_moment * two_n.powi(d as i32) / moment_function_f(s, theta));
            let side = 1i64 << n;
            let law = law.clone();
            Box::new(move |seed| {
                if s == 0.0 {
                    return Ok(false);
                }
                let bbox = SpaceTimeBox::new(vec![0; d], vec![side; d], 0.0, t + s)?;
                for i in 0..bbox.num_sites() {
                    let tr = generate_track(&law, 0.0, t + s, &mut rng_for(seed, tag::CURE, &bbox.site_coords(i)))?;
                    if !tr.has_mark_in_closed(t, t + s) {
                        return Ok(true);
                    }
                }
                Ok(false)
            })
        }
        EventSpec::B { eps, alpha, k_const, .. } => {
            let a = tail_index(law, alpha, "B")?;
            if !(a < 0.5 && eps > 0.0 && eps < 0.5 - a) {
                return precondition(format!(
                    "event B needs alpha < 1/2 and eps in (0, 1/2 - alpha); alpha={a}, eps={eps}"
                ));
            }
            bound = Some(k_const * n_f.powi(6 * d as i32) * 2f64.powf(-n_f * (1.0 - 2.0 * a - 2.0 * eps)));
            coincidence_event(law, d, n, eps, 1)
        }
        EventSpec::Bm { eps, m, alpha, k_const, .. } => {
            let a = tail_index(law, alpha, "Bm")?;
            if m == 0 || !(eps > 0.0 && 1.0 - a > 1.0 / (m as f64 + 1.0) + eps) {
                return precondition(format!(
                    "event Bm needs m >= 1, eps > 0 and 1 - alpha > 1/(m+1) + eps; alpha={a}, m={m}, eps={eps}"
                ));
            }
            let m1 = m as f64 + 1.0;
            let rate = m as f64 - m1 * a - m1 * eps;
            bound = Some(k_const * n_f.powf(3.0 * d as f64 * m1) * 2f64.powf(-n_f * rate));
            coincidence_event(law, d, n, eps, m)
        }
        EventSpec::C { eps2, lambda, k_const, c_const, .. } => {
            if !(eps2 > 0.0 && eps2 < 1.0) {
                return precondition(format!("event C needs eps2 in (0, 1), got {eps2}"));
            }
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return domain(format!("transmission rate must be finite and >= 0, got {lambda}"));
            }
            bound = Some(cn_bound(n, eps2, d, k_const, c_const));
            let w = 2f64.powf(n_f * eps2);
            let r = cube_radius(n);
            let law = law.clone();
            Box::new(move |seed| {
                let bbox = SpaceTimeBox::centered(d, r, lo, hi)?;
                if bbox.num_sites() > MAX_SITES {
                    return Err(RcpError::Capacity(format!("{} sites exceed the budget", bbox.num_sites())));
                }
                let sample = build_sample_with(&bbox, lambda, &law, SeedSpec::new(seed), &BuildOptions::default())?;
                free_infection_fails(&sample, lo, hi - w, w)
            })
        }
        EventSpec::D { eps, alpha, k_const, c_const, .. } => {
            let a = tail_index(law, alpha, "D")?;
            if !(eps > 0.0 && eps < 1.0) {
                return precondition(format!("event D needs eps in (0, 1), got {eps}"));
            }
            let g = 1.0 - (1.0 - a) / 4.0;
            let len = 2f64.powf(n_f * eps);
            let threshold = n_f * n_f * 2f64.powf(n_f * eps * g);
            bound = Some(k_const * n_f.powi(3 * d as i32) * two_n * 2f64.powf(-c_const * eps * eps * n_f * n_f));
            let r = cube_radius(n);
            let law = law.clone();
            Box::new(move |seed| {
                let tracks = cube_tracks(&law, d, r, hi, seed)?;
                Ok(tracks.iter().any(|tr| max_window_count(tr, lo, hi, len) as f64 >= threshold))
            })
        }
        EventSpec::A { big_m, eps, m, alpha, .. } => {
            if m == 0 || m > 2 * d {
                return precondition(format!("event A needs 1 <= m <= 2d, got m={m}"));
            }
            if !(big_m >= 0.0 && eps > 0.0 && eps <= big_m + 1.0) {
                return precondition(format!("event A needs M >= 0 and 0 < eps <= M + 1; M={big_m}, eps={eps}"));
            }
            let a = tail_index(law, alpha, "A")?;
            if !(1.0 - a < 1.0 / (m as f64 + 1.0)) {
                return precondition(format!("event A with m={m} needs 1 - alpha < 1/(m+1), alpha={a}"));
            }
            bound = None;
            let horizon = 2.0 * two_n + big_m + 2.0 + eps;
            let law = law.clone();
            Box::new(move |seed| {
                let origin = vec![0i64; d];
                let track = |x: &[i64]| generate_track(&law, 0.0, horizon, &mut rng_for(seed, tag::CURE, x));
                let o = track(&origin)?;
                let nb: Vec<RenewalTrack> = (0..m).map(|dir| track(&step(&origin, dir))).collect::<Result<_>>()?;
                Ok(block_event(&o, &nb, two_n, 2.0 * two_n, big_m, eps))
            })
        }
    };
    let hits: Vec<bool> = (0..trials).into_par_iter().map(|i| event(trial_seed(seed, i))).collect::<Result<_>>()?;
    let estimate = EstimateResult::from_counts(hits.iter().filter(|&&h| h).count() as u64, trials as u64);
    Ok(EventEstimate { n, estimate, bound, within_bound: bound.map(|b| estimate.estimate <= b) })
}

fn coincidence_event(
    law: &InterarrivalLaw,
    d: usize,
    n: u32,
    eps: f64,
    m: usize,
) -> Box<dyn Fn(u64) -> Result<bool> + Sync> {
    let two_n = 2f64.powi(n as i32);
    let w = 2.0 * 2f64.powf(n as f64 * eps);
    let r = cube_radius(n);
    let law = law.clone();
    Box::new(move |seed| {
        let tracks = cube_tracks(&law, d, r, 4.0 * two_n + w, seed)?;
        Ok(coincidence(&tracks, two_n, 4.0 * two_n, w, m))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::is_epsilon_block;
    use crate::seed::open01;

    fn track(marks: &[f64], horizon: f64) -> RenewalTrack {
        RenewalTrack::from_marks(0.0, marks.to_vec(), horizon).unwrap()
    }

    #[test]
    fn empty_window_for_j_is_false() {
        let law = InterarrivalLaw::pareto_tail(0.7, 1.0).unwrap();
        let spec = EventSpec::J { n: 2, t: 3.0, s: 0.0, theta: 2.5, c_moment: 1.0 };
        let r = estimate_event_prob(&spec, &law, 1, 50, 1).unwrap();
        assert_eq!(r.estimate.estimate, 0.0);
        assert_eq!(r.bound, None);
    }

    #[test]
    fn sparse_deterministic_marks_never_crowd() {
        // Marks every 5 time units: at most one in any window of length 2^(n eps) = 2.
        let law = InterarrivalLaw::deterministic(5.0).unwrap();
        let spec = EventSpec::D { n: 2, eps: 0.5, alpha: Some(0.5), k_const: 1.0, c_const: 1.0 };
        let r = estimate_event_prob(&spec, &law, 1, 5, 1).unwrap();
        assert_eq!(r.estimate.estimate, 0.0);
    }

    #[test]
    fn window_counts() {
        let tr = track(&[1.0, 1.5, 2.0, 2.2, 8.0, 9.9], 10.0);
        assert_eq!(max_window_count(&tr, 0.0, 10.0, 1.0), 3);
        assert_eq!(max_window_count(&tr, 0.0, 10.0, 1.2), 4);
        assert_eq!(max_window_count(&tr, 0.0, 10.0, 0.1), 1);
        assert_eq!(max_window_count(&tr, 1.6, 10.0, 1.0), 2);
    }

    #[test]
    fn coincidence_by_hand() {
        let a = track(&[10.0], 30.0);
        let b = track(&[12.5], 30.0);
        let c = track(&[14.5], 30.0);
        assert!(coincidence(&[a.clone(), b.clone()], 8.0, 20.0, 3.0, 1));
        assert!(!coincidence(&[a.clone(), b.clone()], 8.0, 20.0, 1.4, 1));
        assert!(!coincidence(&[a.clone(), b.clone(), c.clone()], 8.0, 20.0, 3.0, 2));
        assert!(coincidence(&[a, b, c], 8.0, 20.0, 4.6, 2));
        // A site alone never coincides with itself.
        assert!(!coincidence(&[track(&[10.0, 10.5], 30.0)], 8.0, 20.0, 3.0, 1));
    }

    #[test]
    fn coincidence_events_reject_out_of_range_parameters() {
        let law = InterarrivalLaw::pareto_tail(0.3, 1.0).unwrap();
        let spec = EventSpec::B { n: 2, eps: 0.3, alpha: None, k_const: 1.0 };
        assert!(matches!(estimate_event_prob(&spec, &law, 1, 1, 0), Err(RcpError::Precondition(_))));
        let spec = EventSpec::Bm { n: 2, eps: 0.3, m: 1, alpha: None, k_const: 1.0 };
        assert!(matches!(estimate_event_prob(&spec, &law, 1, 1, 0), Err(RcpError::Precondition(_))));
        let spec = EventSpec::C { n: 2, eps2: 1.5, lambda: 1.0, k_const: 1.0, c_const: 1.0 };
        assert!(matches!(estimate_event_prob(&spec, &law, 1, 1, 0), Err(RcpError::Precondition(_))));
    }

    /// Brute-force version of the block event on a fine grid of `t`.
    fn block_event_grid(o: &RenewalTrack, nb: &[RenewalTrack], lo: f64, hi: f64, big_m: f64, eps: f64) -> bool {
        let steps = 20_000;
        (0..steps).any(|k| {
            let t = lo + (hi - lo) * k as f64 / steps as f64;
            lo_point_ok(o, nb, t, big_m, eps)
        })
    }

    #[test]
    fn block_event_matches_grid_search() {
        let mut rng = rng_for(5, tag::TRIAL, &[]);
        let mut agree = 0;
        for case in 0..300 {
            let mut make = |rate: f64| {
                let mut t = 0.0;
                let mut marks = Vec::new();
                loop {
                    t += -open01(&mut rng).ln() / rate;
                    if t > 30.0 {
                        break;
                    }
                    marks.push(t);
                }
                let mut tr = track(&marks, 30.0);
                tr.next = Some(30.0 + 1.0);
                tr
            };
            let o = make(0.6);
            let nb = vec![make(3.0), make(4.0)];
            let exact = block_event(&o, &nb, 8.0, 16.0, 1.5, 0.8);
            let grid = block_event_grid(&o, &nb, 8.0, 16.0, 1.5, 0.8);
            // The grid can miss feasible sets shorter than its spacing.
            if grid {
                assert!(exact, "case {case}: grid found a time the interval method missed");
            }
            agree += usize::from(exact == grid);
        }
        assert!(agree >= 295, "only {agree} of 300 cases agree");
    }

    #[test]
    fn cn_fit_passes_through_its_points() {
        let (k, c) = fit_cn_constants((4, 0.9), (5, 0.5), 0.5, 1).unwrap();
        assert!((cn_bound(4, 0.5, 1, k, c) - 0.9).abs() < 1e-9);
        assert!((cn_bound(5, 0.5, 1, k, c) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn complete_transmission_graph_freely_infects() {
        let bbox = SpaceTimeBox::new(vec![0], vec![2], 0.0, 10.0).unwrap();
        let sample = GraphicalSample::from_marks(
            bbox,
            1.0,
            &[],
            &[
                (vec![0], vec![1], vec![1.0]),
                (vec![1], vec![2], vec![2.0]),
                (vec![2], vec![1], vec![1.5]),
                (vec![1], vec![0], vec![2.5]),
            ],
        )
        .unwrap();
        assert!(!free_infection_fails(&sample, 0.5, 0.5, 2.6).unwrap());
        assert!(free_infection_fails(&sample, 0.5, 0.5, 1.8).unwrap());
        // Starting after the first mark loses it.
        assert!(free_infection_fails(&sample, 0.5, 1.2, 2.6).unwrap());
    }

    #[test]
    fn interval_helpers() {
        assert_eq!(normalize(vec![(3.0, 4.0), (1.0, 2.0), (1.5, 3.5), (5.0, 5.0)]), vec![(1.0, 4.0)]);
        assert_eq!(intersect(&[(0.0, 2.0), (3.0, 5.0)], &[(1.0, 4.0)]), vec![(1.0, 2.0), (3.0, 4.0)]);
        let tr = track(&[1.0, 1.4, 1.8, 5.0], 6.0);
        let blocks = block_times(&tr, 0.6, 0.5);
        // Chain [1.0, 1.8] gives t in (0.5, 1.7); the start and the mark at 5 stand alone.
        assert_eq!(blocks, vec![(-0.5, 0.0 - 0.6 + 0.5), (0.5, 1.8 - 0.6 + 0.5), (4.5, 5.0 - 0.6 + 0.5)]);
        assert!(is_epsilon_block(&tr, 1.2, 1.8, 0.5).unwrap());
        assert!(!is_epsilon_block(&tr, 1.75, 2.35, 0.5).unwrap());
    }
}
