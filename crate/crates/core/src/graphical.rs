//! Graphical construction on a finite space-time box.
//!
//! Cures at each site follow a renewal track; each directed nearest-neighbour
//! edge carries an independent rate-`lambda` Poisson process of transmission
//! marks. Every stream is seeded from absolute coordinates, so enlarging the
//! box never changes the marks already present.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, RcpError, Result};
use crate::renewal::{generate_track_capped, integrated_tail_m, InterarrivalLaw, RenewalTrack};
use crate::seed::{exponential, open01, rng_for, tag};

/// A box `prod [a_i, b_i] x [s, t]` of integer sites and real times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    pub s: f64,
    pub t: f64,
}

impl SpaceTimeBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>, s: f64, t: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return domain("box corners must have the same positive dimension");
        }
        if lower.iter().zip(&upper).any(|(a, b)| a > b) {
            return domain(format!("box corners out of order: {lower:?} > {upper:?}"));
        }
        if !(s < t) || !s.is_finite() || !t.is_finite() {
            return domain(format!("box time window needs s < t, got [{s}, {t}]"));
        }
        Ok(Self { lower, upper, s, t })
    }

    /// The cube `[-radius, radius]^d` over `[s, t]`.
    pub fn centered(d: usize, radius: i64, s: f64, t: f64) -> Result<Self> {
        Self::new(vec![-radius; d], vec![radius; d], s, t)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, j: usize) -> usize {
        (self.upper[j] - self.lower[j] + 1) as usize
    }

    pub fn num_sites(&self) -> usize {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn contains_site(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Whether `other` lies inside this box in space and time.
    pub fn contains_box(&self, other: &SpaceTimeBox) -> bool {
        other.dim() == self.dim()
            && self.contains_site(&other.lower)
            && self.contains_site(&other.upper)
            && other.s >= self.s
            && other.t <= self.t
    }

    /// Row-major index with the first coordinate varying fastest.
    pub fn site_index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains_site(x) {
            return None;
        }
        let mut idx = 0;
        let mut stride = 1;
        for (j, (&xj, &lo)) in x.iter().zip(&self.lower).enumerate() {
            idx += (xj - lo) as usize * stride;
            stride *= self.width(j);
        }
        Some(idx)
    }

    pub fn site_coords(&self, mut idx: usize) -> Vec<i64> {
        let mut x = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let w = self.width(j);
            x.push(self.lower[j] + (idx % w) as i64);
            idx /= w;
        }
        x
    }

    /// Number of directed nearest-neighbour edges with both ends inside.
    pub fn num_directed_edges(&self) -> usize {
        let n = self.num_sites();
        (0..self.dim()).map(|j| 2 * n / self.width(j) * (self.width(j) - 1)).sum()
    }

    /// The half of the box containing the face `x_j = b_j`.
    pub fn upper_half(&self, j: usize) -> SpaceTimeBox {
        let mut lower = self.lower.clone();
        lower[j] = self.lower[j] + (self.upper[j] - self.lower[j]) / 2;
        SpaceTimeBox { lower, upper: self.upper.clone(), s: self.s, t: self.t }
    }
}

/// Direction `dir` encodes axis `dir / 2`, positive when `dir` is even.
pub fn step(x: &[i64], dir: usize) -> Vec<i64> {
    let mut y = x.to_vec();
    y[dir / 2] += if dir % 2 == 0 { 1 } else { -1 };
    y
}

/// Master seeds for the cure and transmission families.
///
/// Keeping them separate lets callers freeze the cures while resampling
/// transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub cure: u64,
    pub transmission: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self { cure: master, transmission: master }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Cure { site: usize },
    Transmission { from: usize, to: usize, dir: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Event {
    fn order_key(&self) -> (u8, usize, usize) {
        match self.kind {
            EventKind::Cure { site } => (0, site, 0),
            EventKind::Transmission { from, dir, .. } => (1, from, dir),
        }
    }
}

/// Options for [`build_sample_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    /// Start offset `tau <= min(0, s)` per site; unlisted sites start at `min(0, s)`.
    pub start_offsets: BTreeMap<Vec<i64>, f64>,
    /// Generate transmissions at this rate and keep each independently with
    /// probability `lambda / ceiling`. Samples sharing a seed and ceiling are
    /// then nested in `lambda`.
    pub lambda_ceiling: Option<f64>,
    /// Upper bound on the total number of marks.
    pub max_marks: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { start_offsets: BTreeMap::new(), lambda_ceiling: None, max_marks: 50_000_000 }
    }
}

/// Marks of the graphical construction inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalSample {
    pub bbox: SpaceTimeBox,
    pub lambda: f64,
    pub law: Option<InterarrivalLaw>,
    pub seed: Option<SeedSpec>,
    /// Full cure track per site, from its start offset to `t`.
    pub cures: Vec<RenewalTrack>,
    /// Transmission times per `site * 2d + dir`, sorted, in `(s, t]`.
    pub trans: Vec<Vec<f64>>,
    coords: Vec<i64>,
    neighbours: Vec<Option<usize>>,
    events: Vec<Event>,
}

pub fn build_sample(
    bbox: &SpaceTimeBox,
    lambda: f64,
    law: &InterarrivalLaw,
    seed: SeedSpec,
) -> Result<GraphicalSample> {
    build_sample_with(bbox, lambda, law, seed, &BuildOptions::default())
}

fn expected_cures(law: &InterarrivalLaw, span: f64) -> f64 {
    // Renewal counts satisfy E N(t) <= 2 t / m(t) up to the first mark.
    match integrated_tail_m(law, span) {
        Ok(m) if m > 0.0 => 1.0 + span / m,
        _ => 1.0,
    }
}

pub fn build_sample_with(
    bbox: &SpaceTimeBox,
    lambda: f64,
    law: &InterarrivalLaw,
    seed: SeedSpec,
    opts: &BuildOptions,
) -> Result<GraphicalSample> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("transmission rate must be finite and >= 0, got {lambda}"));
    }
    let ceiling = opts.lambda_ceiling.unwrap_or(lambda);
    if ceiling < lambda {
        return domain(format!("thinning ceiling {ceiling} is below lambda {lambda}"));
    }
    law.validate()?;
    let n = bbox.num_sites();
    let default_start = bbox.s.min(0.0);
    let mut starts = vec![default_start; n];
    for (x, &tau) in &opts.start_offsets {
        let Some(i) = bbox.site_index(x) else {
            return domain(format!("start offset given for site {x:?} outside the box"));
        };
        if !(tau <= 0.0 && tau <= bbox.s) {
            return domain(format!("start offset {tau} at {x:?} must be <= min(0, s)"));
        }
        starts[i] = tau;
    }
    let earliest = starts.iter().copied().fold(default_start, f64::min);
    let expected = bbox.num_directed_edges() as f64 * ceiling * (bbox.t - bbox.s)
        + n as f64 * expected_cures(law, bbox.t - earliest);
    if expected > opts.max_marks as f64 {
        return Err(RcpError::Capacity(format!("about {expected:.3e} marks expected, budget is {}", opts.max_marks)));
    }

    let cures: Vec<RenewalTrack> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = bbox.site_coords(i);
            let mut rng = rng_for(seed.cure, tag::CURE, &x);
            generate_track_capped(law, starts[i], bbox.t, opts.max_marks, &mut rng)
        })
        .collect::<Result<_>>()?;

    let trans = generate_transmissions(bbox, lambda, ceiling, seed.transmission);

    let total: usize = cures.iter().map(|c| c.marks.len()).sum::<usize>() + trans.iter().map(Vec::len).sum::<usize>();
    if total > opts.max_marks {
        return Err(RcpError::Capacity(format!("{total} marks generated, budget is {}", opts.max_marks)));
    }
    let mut sample = GraphicalSample::assemble(bbox.clone(), lambda, Some(law.clone()), Some(seed), cures, trans);
    sample.resolve_collisions(seed.transmission);
    Ok(sample)
}

/// Transmission lists for every directed edge of `bbox`, generated at rate
/// `ceiling` and thinned to rate `lambda`.
fn generate_transmissions(bbox: &SpaceTimeBox, lambda: f64, ceiling: f64, master: u64) -> Vec<Vec<f64>> {
    let n = bbox.num_sites();
    let d = bbox.dim();
    let keep = if ceiling > 0.0 { lambda / ceiling } else { 0.0 };
    (0..n * 2 * d)
        .into_par_iter()
        .map(|e| {
            let (i, dir) = (e / (2 * d), e % (2 * d));
            let x = bbox.site_coords(i);
            if ceiling == 0.0 || !bbox.contains_site(&step(&x, dir)) {
                return Vec::new();
            }
            let mut key = x;
            key.push(dir as i64);
            let mut rng = rng_for(master, tag::TRANSMISSION, &key);
            let mut out = Vec::new();
            let mut t = bbox.s;
            loop {
                t += exponential(&mut rng, ceiling);
                if t > bbox.t {
                    break;
                }
                if open01(&mut rng) <= keep {
                    out.push(t);
                }
            }
            out
        })
        .collect()
}

impl GraphicalSample {
    /// Fresh transmissions around given cure tracks, one per site of `bbox`.
    pub fn with_frozen_cures(
        bbox: &SpaceTimeBox,
        lambda: f64,
        cures: Vec<RenewalTrack>,
        transmission_seed: u64,
    ) -> Result<Self> {
        if cures.len() != bbox.num_sites() {
            return domain("one cure track per site is required");
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("transmission rate must be finite and >= 0, got {lambda}"));
        }
        let trans = generate_transmissions(bbox, lambda, lambda, transmission_seed);
        let mut sample = Self::assemble(bbox.clone(), lambda, None, None, cures, trans);
        sample.resolve_collisions(transmission_seed);
        Ok(sample)
    }

    fn assemble(
        bbox: SpaceTimeBox,
        lambda: f64,
        law: Option<InterarrivalLaw>,
        seed: Option<SeedSpec>,
        cures: Vec<RenewalTrack>,
        trans: Vec<Vec<f64>>,
    ) -> Self {
        let n = bbox.num_sites();
        let d = bbox.dim();
        let mut coords = Vec::with_capacity(n * d);
        for i in 0..n {
            coords.extend(bbox.site_coords(i));
        }
        let mut neighbours = Vec::with_capacity(n * 2 * d);
        for i in 0..n {
            let x = &coords[i * d..(i + 1) * d];
            for dir in 0..2 * d {
                neighbours.push(bbox.site_index(&step(x, dir)));
            }
        }
        let mut s = Self { bbox, lambda, law, seed, cures, trans, coords, neighbours, events: Vec::new() };
        s.rebuild_events();
        s
    }

    fn rebuild_events(&mut self) {
        let d2 = 2 * self.bbox.dim();
        let (s, t) = (self.bbox.s, self.bbox.t);
        let mut events = Vec::new();
        for (site, track) in self.cures.iter().enumerate() {
            for &m in track.marks.iter().filter(|&&m| m > s && m <= t) {
                events.push(Event { time: m, kind: EventKind::Cure { site } });
            }
        }
        for (e, list) in self.trans.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let (from, dir) = (e / d2, e % d2);
            let to = self.neighbours[e].expect("transmissions only on interior edges");
            events.extend(list.iter().map(|&time| Event { time, kind: EventKind::Transmission { from, to, dir } }));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.order_key().cmp(&b.order_key())));
        self.events = events;
    }

    /// Re-draws transmission times that coincide with another mark.
    ///
    /// Cure marks may tie with each other (lattice laws); cures commute, so
    /// those ties are harmless and left alone.
    fn resolve_collisions(&mut self, master: u64) {
        let d2 = 2 * self.bbox.dim();
        for round in 0..64i64 {
            let mut bad: Vec<(usize, f64)> = Vec::new();
            for w in self.events.windows(2) {
                if w[0].time == w[1].time {
                    for ev in [&w[0], &w[1]] {
                        if let EventKind::Transmission { from, dir, .. } = ev.kind {
                            bad.push((from * d2 + dir, ev.time));
                        }
                    }
                }
            }
            if bad.is_empty() {
                return;
            }
            bad.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            bad.dedup();
            for (e, time) in bad {
                let mut key = self.bbox.site_coords(e / d2);
                key.extend([(e % d2) as i64, round, time.to_bits() as i64]);
                let mut rng = rng_for(master, tag::TRANSMISSION, &key);
                let list = &mut self.trans[e];
                if let Some(pos) = list.iter().position(|&x| x == time) {
                    list[pos] = self.bbox.s + (self.bbox.t - self.bbox.s) * open01(&mut rng);
                    list.sort_by(f64::total_cmp);
                }
            }
            self.rebuild_events();
        }
    }

    /// A sample from explicit marks, mainly for tests and replay.
    ///
    /// `cure_marks` lists marks per site; unlisted sites have none. Each
    /// transmission entry is `(from, to, times)`. Transmission times must
    /// not coincide with any other mark.
    pub fn from_marks(
        bbox: SpaceTimeBox,
        lambda: f64,
        cure_marks: &[(Vec<i64>, Vec<f64>)],
        trans_marks: &[(Vec<i64>, Vec<i64>, Vec<f64>)],
    ) -> Result<Self> {
        let n = bbox.num_sites();
        let d = bbox.dim();
        let start = bbox.s.min(0.0);
        let mut cures = vec![RenewalTrack { start, marks: vec![], horizon: bbox.t, next: None }; n];
        for (x, marks) in cure_marks {
            let i = bbox.site_index(x).ok_or_else(|| RcpError::Domain(format!("cure site {x:?} outside box")))?;
            cures[i] = RenewalTrack::from_marks(start, marks.clone(), bbox.t)?;
        }
        let mut trans = vec![Vec::new(); n * 2 * d];
        for (x, y, times) in trans_marks {
            let i = bbox.site_index(x).ok_or_else(|| RcpError::Domain(format!("edge source {x:?} outside box")))?;
            if !bbox.contains_site(y) {
                return domain(format!("edge target {y:?} outside box"));
            }
            let dir = (0..2 * d)
                .find(|&dir| step(x, dir) == *y)
                .ok_or_else(|| RcpError::Domain(format!("{x:?} -> {y:?} is not a nearest-neighbour edge")))?;
            let list = &mut trans[i * 2 * d + dir];
            list.extend(times.iter().copied());
            if times.iter().any(|&v| !(v > bbox.s && v <= bbox.t)) {
                return domain(format!("transmission times on {x:?} -> {y:?} must lie in (s, t]"));
            }
            list.sort_by(f64::total_cmp);
        }
        let sample = Self::assemble(bbox, lambda, None, None, cures, trans);
        for w in sample.events.windows(2) {
            let trans_involved = [w[0], w[1]].iter().any(|e| matches!(e.kind, EventKind::Transmission { .. }));
            if w[0].time == w[1].time && trans_involved {
                return domain(format!("transmission mark at {} ties with another mark", w[0].time));
            }
        }
        Ok(sample)
    }

    /// Rebuilds a sample from stored parts, as read back from a dump.
    pub fn from_parts(
        bbox: SpaceTimeBox,
        lambda: f64,
        law: Option<InterarrivalLaw>,
        seed: Option<SeedSpec>,
        cures: Vec<RenewalTrack>,
        trans: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = bbox.num_sites();
        if cures.len() != n || trans.len() != n * 2 * bbox.dim() {
            return Err(RcpError::Format("stream counts do not match the box".into()));
        }
        Ok(Self::assemble(bbox, lambda, law, seed, cures, trans))
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn num_sites(&self) -> usize {
        self.bbox.num_sites()
    }

    /// Coordinates of site `i`.
    pub fn coords(&self, i: usize) -> &[i64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn neighbour(&self, i: usize, dir: usize) -> Option<usize> {
        self.neighbours[i * 2 * self.dim() + dir]
    }

    pub fn transmissions(&self, i: usize, dir: usize) -> &[f64] {
        &self.trans[i * 2 * self.dim() + dir]
    }

    /// All marks in the window, sorted by time.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Marks with time in `(t1, t2]`.
    pub fn events_between(&self, t1: f64, t2: f64) -> Result<&[Event]> {
        if t1 > t2 {
            return domain(format!("event range inverted: ({t1}, {t2}]"));
        }
        if t1 < self.bbox.s || t2 > self.bbox.t {
            return domain(format!("event range ({t1}, {t2}] outside window [{}, {}]", self.bbox.s, self.bbox.t));
        }
        let lo = self.events.partition_point(|e| e.time <= t1);
        let hi = self.events.partition_point(|e| e.time <= t2);
        Ok(&self.events[lo..hi])
    }

    pub fn num_marks(&self) -> usize {
        self.events.len()
    }
}
