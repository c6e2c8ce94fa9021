//! The infection engine and path predicates.
//!
//! Infection is decided by sweeping the time-ordered marks: a cure at `x`
//! removes `x`, a transmission `x -> y` adds `y` when `x` is infected just
//! before. The configuration is right-continuous: at an event time it holds
//! the post-event value. Infection never leaves the box.

use std::fmt::Write as _;

use crate::error::{domain, Result};
use crate::graphical::{Event, EventKind, GraphicalSample, SpaceTimeBox};

/// A set of infected sites of a sample's box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    infected: Vec<bool>,
    count: usize,
}

impl Configuration {
    pub fn empty(n_sites: usize) -> Self {
        Self { infected: vec![false; n_sites], count: 0 }
    }

    pub fn full(n_sites: usize) -> Self {
        Self { infected: vec![true; n_sites], count: n_sites }
    }

    /// Infected set given by coordinates inside `bbox`.
    pub fn from_sites(bbox: &SpaceTimeBox, sites: &[Vec<i64>]) -> Result<Self> {
        let mut c = Self::empty(bbox.num_sites());
        for x in sites {
            match bbox.site_index(x) {
                Some(i) => c.insert(i),
                None => return domain(format!("initial site {x:?} outside the box")),
            };
        }
        Ok(c)
    }

    /// All sites of the sub-box `region`.
    pub fn from_region(bbox: &SpaceTimeBox, region: &SpaceTimeBox) -> Self {
        let mut c = Self::empty(bbox.num_sites());
        for i in 0..bbox.num_sites() {
            if region.contains_site(&bbox.site_coords(i)) {
                c.insert(i);
            }
        }
        c
    }

    pub fn contains(&self, i: usize) -> bool {
        self.infected[i]
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let fresh = !self.infected[i];
        if fresh {
            self.infected[i] = true;
            self.count += 1;
        }
        fresh
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let was = self.infected[i];
        if was {
            self.infected[i] = false;
            self.count -= 1;
        }
        was
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn num_sites(&self) -> usize {
        self.infected.len()
    }

    /// Indices of infected sites, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.infected.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.infected.iter().zip(&other.infected).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Infected(usize),
    Cured(usize),
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub event: Event,
    pub effect: Effect,
    pub infected_count: usize,
}

/// Time at which the infection died out, or the horizon if it did not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivalTime {
    Extinct(f64),
    Censored(f64),
}

impl SurvivalTime {
    pub fn time(&self) -> f64 {
        match self {
            Self::Extinct(t) | Self::Censored(t) => *t,
        }
    }

    pub fn survived(&self) -> bool {
        matches!(self, Self::Censored(_))
    }
}

/// Complete record of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectionHistory {
    pub bbox: SpaceTimeBox,
    pub start: f64,
    pub stop: f64,
    pub initial: Configuration,
    pub records: Vec<HistoryRecord>,
    /// Largest sup-norm of any site ever infected.
    pub max_norm: Option<i64>,
    /// Whether a site on the spatial boundary of the box was ever infected.
    pub boundary_hit: bool,
    pub extinction: Option<f64>,
}

fn norm(x: &[i64]) -> i64 {
    x.iter().map(|v| v.abs()).max().unwrap_or(0)
}

fn on_boundary(bbox: &SpaceTimeBox, x: &[i64]) -> bool {
    x.iter().enumerate().any(|(j, &v)| v == bbox.lower[j] || v == bbox.upper[j])
}

/// Applies one event to `config`, restricted to sites accepted by `inside`.
/// Clamped sites never heal.
#[inline]
fn apply(config: &mut Configuration, ev: &Event, inside: &impl Fn(usize) -> bool, clamped: &[bool]) -> Effect {
    match ev.kind {
        EventKind::Cure { site } => {
            if inside(site) && !clamped.get(site).copied().unwrap_or(false) && config.remove(site) {
                Effect::Cured(site)
            } else {
                Effect::NoOp
            }
        }
        EventKind::Transmission { from, to, .. } => {
            if config.contains(from) && inside(from) && inside(to) && config.insert(to) {
                Effect::Infected(to)
            } else {
                Effect::NoOp
            }
        }
    }
}

/// Evolves `initial` from the start of the sample's window to `stop`.
pub fn evolve(sample: &GraphicalSample, initial: &Configuration, stop: f64) -> Result<InfectionHistory> {
    evolve_from(sample, initial, sample.bbox.s, stop)
}

/// Evolves `initial`, given at time `start`, up to `stop`.
pub fn evolve_from(
    sample: &GraphicalSample,
    initial: &Configuration,
    start: f64,
    stop: f64,
) -> Result<InfectionHistory> {
    if initial.num_sites() != sample.num_sites() {
        return domain("configuration does not match the sample's box");
    }
    let events = sample.events_between(start, stop)?;
    let mut config = initial.clone();
    let mut max_norm = initial.indices().iter().map(|&i| norm(sample.coords(i))).max();
    let mut boundary_hit = initial.indices().iter().any(|&i| on_boundary(&sample.bbox, sample.coords(i)));
    let mut records = Vec::new();
    let mut extinction = if config.is_empty() { Some(start) } else { None };
    if extinction.is_none() {
        for ev in events {
            let effect = apply(&mut config, ev, &|_| true, &[]);
            if let Effect::Infected(y) = effect {
                let x = sample.coords(y);
                max_norm = max_norm.max(Some(norm(x)));
                boundary_hit |= on_boundary(&sample.bbox, x);
            }
            records.push(HistoryRecord { event: *ev, effect, infected_count: config.len() });
            if config.is_empty() {
                extinction = Some(ev.time);
                break;
            }
        }
    }
    Ok(InfectionHistory {
        bbox: sample.bbox.clone(),
        start,
        stop,
        initial: initial.clone(),
        records,
        max_norm,
        boundary_hit,
        extinction,
    })
}

/// Outcome of a lean survival run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRun {
    pub survival: SurvivalTime,
    pub boundary_hit: bool,
}

/// Survival time and boundary flag without recording a history.
pub fn run_survival(sample: &GraphicalSample, initial: &Configuration, stop: f64) -> Result<SurvivalRun> {
    let events = sample.events_between(sample.bbox.s, stop)?;
    let mut config = initial.clone();
    let mut boundary_hit = initial.indices().iter().any(|&i| on_boundary(&sample.bbox, sample.coords(i)));
    if config.is_empty() {
        return Ok(SurvivalRun { survival: SurvivalTime::Extinct(sample.bbox.s), boundary_hit });
    }
    for ev in events {
        if let Effect::Infected(y) = apply(&mut config, ev, &|_| true, &[]) {
            boundary_hit |= on_boundary(&sample.bbox, sample.coords(y));
        }
        if config.is_empty() {
            return Ok(SurvivalRun { survival: SurvivalTime::Extinct(ev.time), boundary_hit });
        }
    }
    Ok(SurvivalRun { survival: SurvivalTime::Censored(stop), boundary_hit })
}

/// Configuration at time `t` of a lean run (no history kept).
pub fn config_at(sample: &GraphicalSample, initial: &Configuration, start: f64, t: f64) -> Result<Configuration> {
    let mut config = initial.clone();
    for ev in sample.events_between(start, t)? {
        apply(&mut config, ev, &|_| true, &[]);
        if config.is_empty() {
            break;
        }
    }
    Ok(config)
}

pub fn survival_time(history: &InfectionHistory) -> SurvivalTime {
    match history.extinction {
        Some(t) => SurvivalTime::Extinct(t),
        None => SurvivalTime::Censored(history.stop),
    }
}

impl InfectionHistory {
    /// Configuration at time `t` (post-event value at event times).
    pub fn config_at(&self, t: f64) -> Result<Configuration> {
        if t < self.start || t > self.stop {
            return domain(format!("time {t} outside history window [{}, {}]", self.start, self.stop));
        }
        let mut c = self.initial.clone();
        for r in self.records.iter().take_while(|r| r.event.time <= t) {
            match r.effect {
                Effect::Infected(y) => {
                    c.insert(y);
                }
                Effect::Cured(x) => {
                    c.remove(x);
                }
                Effect::NoOp => {}
            }
        }
        Ok(c)
    }

    /// Events at which the largest sup-norm of the infected set strictly
    /// exceeds every earlier value. The initial time never qualifies.
    pub fn extreme_times(&self) -> Vec<(f64, Vec<i64>)> {
        let mut running =
            self.initial.indices().iter().map(|&i| norm(&self.bbox.site_coords(i))).max().unwrap_or(i64::MIN);
        let mut out = Vec::new();
        for r in &self.records {
            if let Effect::Infected(y) = r.effect {
                let x = self.bbox.site_coords(y);
                if norm(&x) > running {
                    running = norm(&x);
                    out.push((r.event.time, x));
                }
            }
        }
        out
    }

    /// A site with sup-norm at most `radius` infected throughout `[a, b]`.
    /// Among candidates the one with least norm, then least index, wins.
    pub fn lasting_site(&self, radius: i64, a: f64, b: f64) -> Result<Option<Vec<i64>>> {
        if a > b {
            return domain(format!("span inverted: [{a}, {b}]"));
        }
        let at_a = self.config_at(a)?;
        if b > self.stop {
            return domain(format!("span end {b} beyond history stop {}", self.stop));
        }
        let mut alive = at_a;
        for r in self.records.iter().filter(|r| r.event.time > a && r.event.time <= b) {
            if let Effect::Cured(x) = r.effect {
                alive.remove(x);
            }
        }
        Ok(alive
            .indices()
            .into_iter()
            .map(|i| self.bbox.site_coords(i))
            .filter(|x| norm(x) <= radius)
            .min_by_key(|x| norm(x)))
    }

    /// History as CSV with columns `time,event_kind,site,infected_count`.
    /// Sites print as `x1;x2;...`, edges as `from->to`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,event_kind,site,infected_count\n");
        let fmt = |i: usize| self.bbox.site_coords(i).iter().map(i64::to_string).collect::<Vec<_>>().join(";");
        for r in &self.records {
            let (kind, site) = match r.event.kind {
                EventKind::Cure { site } => ("cure", fmt(site)),
                EventKind::Transmission { from, to, .. } => ("trans", format!("{}->{}", fmt(from), fmt(to))),
            };
            let _ = writeln!(out, "{},{},{},{}", r.event.time, kind, site, r.infected_count);
        }
        out
    }
}

fn check_inside(sample: &GraphicalSample, b: &SpaceTimeBox) -> Result<()> {
    if !sample.bbox.contains_box(b) {
        return domain(format!(
            "box {:?}x[{}, {}] not inside the sample's box {:?}..{:?}x[{}, {}]",
            (&b.lower, &b.upper),
            b.s,
            b.t,
            sample.bbox.lower,
            sample.bbox.upper,
            sample.bbox.s,
            sample.bbox.t
        ));
    }
    Ok(())
}

fn region_filter<'a>(sample: &'a GraphicalSample, b: &'a SpaceTimeBox) -> impl Fn(usize) -> bool + 'a {
    move |i| b.contains_site(sample.coords(i))
}

/// Whether some infection path in `b` joins its bottom to its top (or to
/// the middle of its time interval when `half`).
pub fn detect_temporal_crossing(sample: &GraphicalSample, b: &SpaceTimeBox, half: bool) -> Result<bool> {
    check_inside(sample, b)?;
    let target = if half { 0.5 * (b.s + b.t) } else { b.t };
    let inside = region_filter(sample, b);
    let mut config = Configuration::from_region(&sample.bbox, b);
    for ev in sample.events_between(b.s, target)? {
        apply(&mut config, ev, &inside, &[]);
        if config.is_empty() {
            return Ok(false);
        }
    }
    Ok(!config.is_empty())
}

/// Whether some infection path in `b` joins the face `x_j = a_j` to the face
/// `x_j = b_j`. With `half`, the path must cross the half of `b` that
/// contains the face `x_j = b_j`, from its middle slice.
///
/// The source face is held infected throughout, since a path may leave it
/// at any time.
pub fn detect_spatial_crossing(sample: &GraphicalSample, b: &SpaceTimeBox, j: usize, half: bool) -> Result<bool> {
    check_inside(sample, b)?;
    if j >= b.dim() {
        return domain(format!("direction {j} out of range for dimension {}", b.dim()));
    }
    let region = if half { b.upper_half(j) } else { b.clone() };
    let (source, target) = (region.lower[j], region.upper[j]);
    if source == target {
        return Ok(true);
    }
    let inside = region_filter(sample, &region);
    let mut config = Configuration::empty(sample.num_sites());
    let mut clamped = vec![false; sample.num_sites()];
    for (i, c) in clamped.iter_mut().enumerate() {
        let x = sample.coords(i);
        if region.contains_site(x) && x[j] == source {
            config.insert(i);
            *c = true;
        }
    }
    for ev in sample.events_between(region.s, region.t)? {
        if let Effect::Infected(y) = apply(&mut config, ev, &inside, &clamped) {
            if sample.coords(y)[j] == target {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// All crossing flags of one box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingReport {
    pub temporal: bool,
    pub temporal_half: bool,
    pub spatial: Vec<bool>,
    pub spatial_half: Vec<bool>,
}

pub fn crossing_report(sample: &GraphicalSample, b: &SpaceTimeBox) -> Result<CrossingReport> {
    Ok(CrossingReport {
        temporal: detect_temporal_crossing(sample, b, false)?,
        temporal_half: detect_temporal_crossing(sample, b, true)?,
        spatial: (0..b.dim()).map(|j| detect_spatial_crossing(sample, b, j, false)).collect::<Result<_>>()?,
        spatial_half: (0..b.dim()).map(|j| detect_spatial_crossing(sample, b, j, true)).collect::<Result<_>>()?,
    })
}

/// Whether `(x, u)` reaches `(y, v)` along transmission marks alone, with
/// times strictly inside `(u, v)` and every site in `allowed`.
pub fn freely_infects(
    sample: &GraphicalSample,
    from: (&[i64], f64),
    to: (&[i64], f64),
    allowed: impl Fn(&[i64]) -> bool,
) -> Result<bool> {
    let ((x, u), (y, v)) = (from, to);
    if !(u < v) {
        return domain(format!("freely-infects needs u < v, got u={u}, v={v}"));
    }
    if !allowed(x) || !allowed(y) {
        return domain("both endpoints must lie in the allowed set");
    }
    if x == y {
        return Ok(true);
    }
    let (Some(xi), Some(yi)) = (sample.bbox.site_index(x), sample.bbox.site_index(y)) else {
        return domain("endpoints must lie in the sample's box");
    };
    let lo = u.max(sample.bbox.s);
    let hi = v.min(sample.bbox.t);
    if lo >= hi {
        return Ok(false);
    }
    let mut reached = vec![false; sample.num_sites()];
    reached[xi] = true;
    for ev in sample.events_between(lo, hi)? {
        if ev.time >= v {
            break;
        }
        if let EventKind::Transmission { from, to, .. } = ev.kind {
            if reached[from] && !reached[to] && allowed(sample.coords(to)) {
                reached[to] = true;
                if to == yi {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}
