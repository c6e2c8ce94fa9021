use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::InterarrivalLaw;
use crate::error::{domain, RcpError, Result};

/// Cure marks at one site.
///
/// The start point counts as a renewal mark for age queries. Generated
/// tracks also remember the first mark beyond the horizon so that the
/// overshoot at any time up to the horizon is observed; hand-built tracks
/// may leave it unknown, in which case late overshoots are censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalTrack {
    pub start: f64,
    pub marks: Vec<f64>,
    pub horizon: f64,
    pub next: Option<f64>,
}

/// Age, overshoot and renewal count at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeOvershoot {
    pub age: f64,
    /// `None` when the next mark lies beyond what the track knows.
    pub overshoot: Option<f64>,
    /// Number of marks in `(start, t]`.
    pub count: usize,
}

impl RenewalTrack {
    /// Builds a track from explicit marks, checking the invariants.
    pub fn from_marks(start: f64, marks: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(start <= 0.0) || !(horizon > start) {
            return domain(format!("track needs start <= 0 < horizon, got start={start}, horizon={horizon}"));
        }
        let mut prev = start;
        for &m in &marks {
            if !(m > prev) || m > horizon {
                return domain(format!("marks must be strictly increasing within ({start}, {horizon}]"));
            }
            prev = m;
        }
        Ok(Self { start, marks, horizon, next: None })
    }

    /// The last mark at or before `t`, start included.
    pub fn last_at_or_before(&self, t: f64) -> f64 {
        let i = self.marks.partition_point(|&m| m <= t);
        if i == 0 {
            self.start
        } else {
            self.marks[i - 1]
        }
    }

    /// The first mark strictly after `t`, if known.
    pub fn first_after(&self, t: f64) -> Option<f64> {
        let i = self.marks.partition_point(|&m| m <= t);
        if i < self.marks.len() {
            Some(self.marks[i])
        } else {
            self.next.filter(|&n| n > t)
        }
    }

    /// The first mark at or after `t`, start included, if known.
    pub fn first_at_or_after(&self, t: f64) -> Option<f64> {
        if self.start >= t {
            return Some(self.start);
        }
        let i = self.marks.partition_point(|&m| m < t);
        if i < self.marks.len() {
            Some(self.marks[i])
        } else {
            self.next.filter(|&n| n >= t)
        }
    }

    /// Marks (start excluded) in the half-open interval `(a, b]`.
    pub fn marks_in(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.marks.partition_point(|&m| m <= a);
        let hi = self.marks.partition_point(|&m| m <= b);
        &self.marks[lo..hi.max(lo)]
    }

    /// Marks in the closed interval `[a, b]`, start excluded.
    pub fn marks_in_closed(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.marks.partition_point(|&m| m < a);
        let hi = self.marks.partition_point(|&m| m <= b);
        &self.marks[lo..hi.max(lo)]
    }

    /// Whether some mark (start included) lies in the closed interval `[a, b]`.
    pub fn has_mark_in_closed(&self, a: f64, b: f64) -> bool {
        self.first_at_or_after(a).is_some_and(|m| m <= b)
    }

    pub fn age_overshoot_at(&self, t: f64) -> Result<AgeOvershoot> {
        if !(t >= self.start && t <= self.horizon) {
            return Err(RcpError::Domain(format!("time {t} outside track range [{}, {}]", self.start, self.horizon)));
        }
        let count = self.marks.partition_point(|&m| m <= t);
        let last = if count == 0 { self.start } else { self.marks[count - 1] };
        let next = if count < self.marks.len() { Some(self.marks[count]) } else { self.next };
        Ok(AgeOvershoot { age: t - last, overshoot: next.map(|n| n - t), count })
    }

    /// Restriction to a later horizon-preserving window, keeping marks in
    /// `(start, horizon]` and the overshoot information.
    pub fn truncated(&self, horizon: f64) -> Self {
        let keep = self.marks.partition_point(|&m| m <= horizon);
        let next = if keep < self.marks.len() { Some(self.marks[keep]) } else { self.next };
        Self { start: self.start, marks: self.marks[..keep].to_vec(), horizon, next }
    }
}

/// Cumulative sums of i.i.d. interarrivals from `start`, stopped at `horizon`.
pub fn generate_track<R: RngCore + ?Sized>(
    law: &InterarrivalLaw,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<RenewalTrack> {
    generate_track_capped(law, start, horizon, usize::MAX, rng)
}

/// As [`generate_track`], failing once more than `max_marks` marks are needed.
pub fn generate_track_capped<R: RngCore + ?Sized>(
    law: &InterarrivalLaw,
    start: f64,
    horizon: f64,
    max_marks: usize,
    rng: &mut R,
) -> Result<RenewalTrack> {
    if !(horizon > 0.0) || !(start <= 0.0) {
        return domain(format!("track needs start <= 0 < horizon, got start={start}, horizon={horizon}"));
    }
    let mut marks = Vec::new();
    let mut t = start;
    loop {
        let next = t + law.sample(rng);
        if next <= t {
            return domain(format!("interarrival vanished at t={t}; time resolution exhausted"));
        }
        t = next;
        if t > horizon {
            break;
        }
        if marks.len() >= max_marks {
            return Err(RcpError::Capacity(format!(
                "track needs more than {max_marks} marks before horizon {horizon}"
            )));
        }
        marks.push(t);
    }
    Ok(RenewalTrack { start, marks, horizon, next: Some(t) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_for, tag};
    use approx::assert_relative_eq;

    fn det() -> InterarrivalLaw {
        InterarrivalLaw::deterministic(1.0).unwrap()
    }

    #[test]
    fn deterministic_tracks() {
        let mut rng = rng_for(0, tag::CURE, &[]);
        let tr = generate_track(&det(), 0.0, 3.5, &mut rng).unwrap();
        assert_eq!(tr.marks, vec![1.0, 2.0, 3.0]);
        assert_eq!(tr.next, Some(4.0));
        let tr = generate_track(&det(), -0.5, 2.0, &mut rng).unwrap();
        assert_eq!(tr.marks, vec![0.5, 1.5]);
    }

    #[test]
    fn age_and_overshoot() {
        let mut rng = rng_for(0, tag::CURE, &[]);
        let tr = generate_track(&det(), 0.0, 3.5, &mut rng).unwrap();
        let ao = tr.age_overshoot_at(2.7).unwrap();
        assert_relative_eq!(ao.age, 0.7, epsilon = 1e-12);
        assert_relative_eq!(ao.overshoot.unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(ao.count, 2);
        let ao = tr.age_overshoot_at(2.0).unwrap();
        assert_eq!(ao.age, 0.0);

        let tr = RenewalTrack::from_marks(0.0, vec![0.5, 1.5], 2.0).unwrap();
        let ao = tr.age_overshoot_at(0.2).unwrap();
        assert_relative_eq!(ao.age, 0.2);
        assert_relative_eq!(ao.overshoot.unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(tr.age_overshoot_at(1.8).unwrap().overshoot, None);
        assert!(tr.age_overshoot_at(2.5).is_err());
        assert!(tr.age_overshoot_at(-0.1).is_err());
    }

    #[test]
    fn invalid_manual_tracks() {
        assert!(RenewalTrack::from_marks(0.0, vec![1.0, 1.0], 2.0).is_err());
        assert!(RenewalTrack::from_marks(0.0, vec![0.0], 2.0).is_err());
        assert!(RenewalTrack::from_marks(0.0, vec![3.0], 2.0).is_err());
        assert!(RenewalTrack::from_marks(0.5, vec![], 2.0).is_err());
    }

    #[test]
    fn poisson_count_mean() {
        let law = InterarrivalLaw::exponential(1.0).unwrap();
        let n = 4000;
        let total: usize = (0..n)
            .map(|i| {
                let mut rng = rng_for(11, tag::TRIAL, &[i]);
                generate_track(&law, 0.0, 5.0, &mut rng).unwrap().marks.len()
            })
            .sum();
        let mean = total as f64 / n as f64;
        // sd of the mean is sqrt(5/4000) ~ 0.035
        assert!((mean - 5.0).abs() < 4.0 * (5.0f64 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn capacity_is_enforced() {
        let law = InterarrivalLaw::exponential(100.0).unwrap();
        let mut rng = rng_for(1, tag::CURE, &[]);
        assert!(matches!(generate_track_capped(&law, 0.0, 100.0, 10, &mut rng), Err(RcpError::Capacity(_))));
    }

    #[test]
    fn closed_interval_queries_include_start() {
        let tr = RenewalTrack::from_marks(0.0, vec![0.5, 1.5], 2.0).unwrap();
        assert!(tr.has_mark_in_closed(0.0, 0.1));
        assert!(tr.has_mark_in_closed(0.5, 0.5));
        assert!(!tr.has_mark_in_closed(0.6, 1.4));
        assert_eq!(tr.marks_in(0.5, 1.5), &[1.5]);
    }
}
