//! Exhaustive path enumeration on tiny samples.
//!
//! An infection path is a sequence of sites joined by transmission marks
//! at increasing times, each site cure-free from its arrival (exclusive)
//! to its departure (inclusive). Everything here enumerates such paths
//! directly, which is exponential in the number of marks and meant only as
//! a reference for the sweep-based engine in [`crate::paths`].

use rand::Rng as _;

use crate::error::Result;
use crate::graphical::{step, EventKind, GraphicalSample, SpaceTimeBox};
use crate::paths::{self, Configuration, SurvivalTime};
use crate::seed::{rng_for, Rng};

struct Marks {
    /// Cure times per site.
    cures: Vec<Vec<f64>>,
    /// `(time, from, to)` transmissions.
    trans: Vec<(f64, usize, usize)>,
}

impl Marks {
    fn new(sample: &GraphicalSample) -> Self {
        let mut cures = vec![Vec::new(); sample.num_sites()];
        let mut trans = Vec::new();
        for ev in sample.events() {
            match ev.kind {
                EventKind::Cure { site } => cures[site].push(ev.time),
                EventKind::Transmission { from, to, .. } => trans.push((ev.time, from, to)),
            }
        }
        Self { cures, trans }
    }

    /// Whether `site` is cured in `(a, b]`.
    fn cured(&self, site: usize, a: f64, b: f64) -> bool {
        self.cures[site].iter().any(|&c| c > a && c <= b)
    }
}

/// Depth-first enumeration from `(site, time)`; `visit` returns `true` to stop.
fn walk(
    marks: &Marks,
    site: usize,
    time: f64,
    end: f64,
    with_cures: bool,
    allowed: &dyn Fn(usize) -> bool,
    visit: &mut dyn FnMut(usize, f64) -> bool,
) -> bool {
    if visit(site, time) {
        return true;
    }
    for &(u, from, to) in &marks.trans {
        if from != site || u <= time || u > end || !allowed(to) {
            continue;
        }
        if with_cures && marks.cured(site, time, u) {
            continue;
        }
        if walk(marks, to, u, end, with_cures, allowed, visit) {
            return true;
        }
    }
    false
}

fn reach(
    sample: &GraphicalSample,
    sources: &[usize],
    start: f64,
    t: f64,
    allowed: &dyn Fn(usize) -> bool,
) -> Vec<bool> {
    let marks = Marks::new(sample);
    let mut hit = vec![false; sample.num_sites()];
    for &x in sources {
        walk(&marks, x, start, t, true, allowed, &mut |y, u| {
            if !marks.cured(y, u, t) {
                hit[y] = true;
            }
            false
        });
    }
    hit
}

/// Sites infected at `t` when `initial` is infected at `start`.
pub fn infected_at(sample: &GraphicalSample, initial: &[usize], start: f64, t: f64) -> Vec<bool> {
    reach(sample, initial, start, t, &|_| true)
}

/// First cure time after which nothing is infected, if any before `stop`.
pub fn extinction_time(sample: &GraphicalSample, initial: &[usize], start: f64, stop: f64) -> Option<f64> {
    if initial.is_empty() {
        return Some(start);
    }
    let marks = Marks::new(sample);
    let mut times: Vec<f64> = marks.cures.iter().flatten().copied().filter(|&c| c > start && c <= stop).collect();
    times.sort_by(f64::total_cmp);
    times.into_iter().find(|&c| !infected_at(sample, initial, start, c).contains(&true))
}

/// Path inside `b` from its bottom to its top, or to its middle time when `half`.
pub fn temporal_crossing(sample: &GraphicalSample, b: &SpaceTimeBox, half: bool) -> bool {
    let inside = |i: usize| b.contains_site(sample.coords(i));
    let sources: Vec<usize> = (0..sample.num_sites()).filter(|&i| inside(i)).collect();
    let target = if half { 0.5 * (b.s + b.t) } else { b.t };
    reach(sample, &sources, b.s, target, &inside).contains(&true)
}

/// Path inside `b` (or its upper half along `j`) joining the two faces
/// orthogonal to direction `j`, starting at any time.
pub fn spatial_crossing(sample: &GraphicalSample, b: &SpaceTimeBox, j: usize, half: bool) -> bool {
    let region = if half { b.upper_half(j) } else { b.clone() };
    let (source, target) = (region.lower[j], region.upper[j]);
    if source == target {
        return true;
    }
    let marks = Marks::new(sample);
    let inside = |i: usize| region.contains_site(sample.coords(i));
    for x in (0..sample.num_sites()).filter(|&i| inside(i) && sample.coords(i)[j] == source) {
        // Starting right after a cure is never worse than starting earlier.
        let mut starts = vec![region.s];
        starts.extend(marks.cures[x].iter().copied().filter(|&c| c > region.s && c < region.t));
        for s in starts {
            let found = walk(&marks, x, s, region.t, true, &inside, &mut |y, _| sample.coords(y)[j] == target);
            if found {
                return true;
            }
        }
    }
    false
}

/// Transmission-only path from `(x, u)` to `(y, v)` with jump times in `(u, v)`.
pub fn freely_infects(sample: &GraphicalSample, x: usize, u: f64, y: usize, v: f64) -> bool {
    let marks = Marks::new(sample);
    let lo = u.max(sample.bbox.s);
    let end = v.min(sample.bbox.t);
    let before_v: Vec<(f64, usize, usize)> = marks.trans.iter().copied().filter(|m| m.0 < v).collect();
    let marks = Marks { cures: marks.cures, trans: before_v };
    x == y || walk(&marks, x, lo, end, false, &|_| true, &mut |z, _| z == y)
}

/// A random sample with at most four sites and at most ten marks.
pub fn random_small_sample(rng: &mut Rng) -> Result<GraphicalSample> {
    let shapes: [(Vec<i64>, Vec<i64>); 6] = [
        (vec![0], vec![0]),
        (vec![0], vec![1]),
        (vec![0], vec![2]),
        (vec![0], vec![3]),
        (vec![0, 0], vec![1, 0]),
        (vec![0, 0], vec![1, 1]),
    ];
    let (lower, upper) = shapes[rng.random_range(0..shapes.len())].clone();
    let bbox = SpaceTimeBox::new(lower, upper, 0.0, 1.0)?;
    let d = bbox.dim();
    let n = bbox.num_sites();
    let edges: Vec<(Vec<i64>, Vec<i64>)> = (0..n)
        .flat_map(|i| {
            let x = bbox.site_coords(i);
            (0..2 * d).map(move |dir| (x.clone(), step(&x, dir)))
        })
        .filter(|(_, y)| bbox.contains_site(y))
        .collect();
    let k = rng.random_range(0..=10usize);
    let mut cures: Vec<(Vec<i64>, Vec<f64>)> = (0..n).map(|i| (bbox.site_coords(i), Vec::new())).collect();
    let mut trans: Vec<(Vec<i64>, Vec<i64>, Vec<f64>)> = Vec::new();
    // Times on a grid of 1/64 keep ties between cures possible but rare.
    let mut used = std::collections::BTreeSet::new();
    for _ in 0..k {
        let slot = loop {
            let s = rng.random_range(1..64u32);
            if used.insert(s) {
                break s;
            }
        };
        let time = slot as f64 / 64.0;
        if edges.is_empty() || rng.random_bool(0.4) {
            cures[rng.random_range(0..n)].1.push(time);
        } else {
            let (x, y) = edges[rng.random_range(0..edges.len())].clone();
            trans.push((x, y, vec![time]));
        }
    }
    for c in &mut cures {
        c.1.sort_by(f64::total_cmp);
    }
    GraphicalSample::from_marks(bbox, 1.0, &cures, &trans)
}

/// Compares the engine with the enumeration on one sample; returns a
/// description of every disagreement.
pub fn compare_with_engine(sample: &GraphicalSample, rng: &mut Rng) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let n = sample.num_sites();
    let bbox = &sample.bbox;
    let initial: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    let config = Configuration::from_sites(bbox, &initial.iter().map(|&i| bbox.site_coords(i)).collect::<Vec<_>>())?;
    let history = paths::evolve(sample, &config, bbox.t)?;
    let mut times: Vec<f64> = sample.events().iter().map(|e| e.time).collect();
    times.extend([0.0, 0.37, 0.5, 0.99, 1.0]);
    for &t in &times {
        let engine = history.config_at(t)?;
        let oracle = infected_at(sample, &initial, bbox.s, t);
        if (0..n).any(|i| engine.contains(i) != oracle[i]) {
            bad.push(format!("configuration at {t}: engine {:?}, oracle {oracle:?}", engine.indices()));
        }
    }
    let engine_ext = match paths::survival_time(&history) {
        SurvivalTime::Extinct(t) => Some(t),
        SurvivalTime::Censored(_) => None,
    };
    let oracle_ext = extinction_time(sample, &initial, bbox.s, bbox.t);
    if engine_ext != oracle_ext {
        bad.push(format!("extinction: engine {engine_ext:?}, oracle {oracle_ext:?}"));
    }
    // Sub-boxes: the whole box and a random sub-rectangle with a sub-window.
    let mut boxes = vec![bbox.clone()];
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for j in 0..bbox.dim() {
        let a = rng.random_range(bbox.lower[j]..=bbox.upper[j]);
        let b = rng.random_range(a..=bbox.upper[j]);
        lower.push(a);
        upper.push(b);
    }
    let s = rng.random_range(0..32u32) as f64 / 64.0 + 1.0 / 128.0;
    let t = s + rng.random_range(1..32u32) as f64 / 64.0;
    boxes.push(SpaceTimeBox::new(lower, upper, s, t)?);
    for b in &boxes {
        for half in [false, true] {
            let e = paths::detect_temporal_crossing(sample, b, half)?;
            let o = temporal_crossing(sample, b, half);
            if e != o {
                bad.push(format!("temporal crossing (half={half}) of {b:?}: engine {e}, oracle {o}"));
            }
            for j in 0..b.dim() {
                let e = paths::detect_spatial_crossing(sample, b, j, half)?;
                let o = spatial_crossing(sample, b, j, half);
                if e != o {
                    bad.push(format!("spatial crossing j={j} (half={half}) of {b:?}: engine {e}, oracle {o}"));
                }
            }
        }
    }
    for _ in 0..4 {
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        let u = rng.random_range(0..48u32) as f64 / 64.0 + 1.0 / 128.0;
        let v = u + rng.random_range(1..=16u32) as f64 / 64.0;
        let (cx, cy) = (bbox.site_coords(x), bbox.site_coords(y));
        let e = paths::freely_infects(sample, (&cx, u), (&cy, v), |_| true)?;
        let o = freely_infects(sample, x, u, y, v);
        if e != o {
            bad.push(format!("freely infects {cx:?}@{u} -> {cy:?}@{v}: engine {e}, oracle {o}"));
        }
    }
    Ok(bad)
}

/// Runs [`compare_with_engine`] on `cases` random samples from `seed`.
pub fn run_cases(cases: usize, seed: u64) -> Result<Vec<String>> {
    let mut rng = rng_for(seed, crate::seed::tag::TRIAL, &[]);
    let mut all = Vec::new();
    for c in 0..cases {
        let sample = random_small_sample(&mut rng)?;
        for msg in compare_with_engine(&sample, &mut rng)? {
            all.push(format!("case {c}: {msg}"));
        }
    }
    Ok(all)
}
