use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{RcpError, Result};
use crate::seed::open01;

/// Law of the waiting time between consecutive cures at a site.
///
/// Every family has support in `(0, inf)`. `ParetoTail` and `ExampleLogSv`
/// are heavy tailed; the latter has a slowly varying integrated tail and is
/// the standard example of a law with infinite mean but subexponential
/// growth of `m(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InterarrivalLaw {
    Exponential {
        rate: f64,
    },
    Deterministic {
        value: f64,
    },
    /// Tail `min(1, (scale / t)^alpha)`.
    ParetoTail {
        alpha: f64,
        scale: f64,
    },
    /// Tail `1` on `[0, t0]` and `K L(t) / t` beyond, with
    /// `L(t) = exp(ln t / ln ln t)` and `K = t0 / L(t0)`.
    ExampleLogSv {
        t0: f64,
    },
    /// Quantile function linearly interpolated through sorted samples.
    Empirical {
        samples: Vec<f64>,
    },
}

impl InterarrivalLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    pub fn pareto_tail(alpha: f64, scale: f64) -> Result<Self> {
        Self::ParetoTail { alpha, scale }.validated()
    }

    pub fn example_log_sv(t0: f64) -> Result<Self> {
        Self::ExampleLogSv { t0 }.validated()
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Self::Empirical { samples }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the family parameters. Laws read from configuration files
    /// should pass through here before use.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RcpError::InvalidLaw(m));
        match self {
            Self::Exponential { rate } if !(rate.is_finite() && *rate > 0.0) => {
                bad(format!("exponential rate must be positive and finite, got {rate}"))
            }
            Self::Deterministic { value } if !(value.is_finite() && *value > 0.0) => {
                bad(format!("deterministic value must be positive and finite, got {value}"))
            }
            Self::ParetoTail { alpha, scale } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    bad(format!("pareto alpha must lie in (0,1), got {alpha}"))
                } else if !(scale.is_finite() && *scale > 0.0) {
                    bad(format!("pareto scale must be positive and finite, got {scale}"))
                } else {
                    Ok(())
                }
            }
            Self::ExampleLogSv { t0 } => {
                if !(t0.is_finite() && *t0 > std::f64::consts::E) {
                    return bad(format!("log-slowly-varying example needs t0 > e, got {t0}"));
                }
                // The tail is decreasing beyond t0 iff the hazard stays positive.
                let mut t = *t0 * (1.0 + 1e-12);
                while t < 1e300 {
                    if !matches!(self.hazard(t), Some(h) if h > 0.0) {
                        return bad(format!("tail is not monotone beyond t0={t0} (at t={t})"));
                    }
                    t *= 1.5;
                }
                Ok(())
            }
            Self::Empirical { samples } => {
                if samples.len() < 2 {
                    bad("empirical law needs at least two samples".into())
                } else if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    bad("empirical samples must be positive and finite".into())
                } else if samples.windows(2).any(|w| w[1] < w[0]) {
                    bad("empirical samples must be sorted ascending".into())
                } else if samples[0] == samples[samples.len() - 1] {
                    bad("empirical samples must not all coincide".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Short human readable name used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Exponential { rate } => format!("Exponential({rate})"),
            Self::Deterministic { value } => format!("Deterministic({value})"),
            Self::ParetoTail { alpha, scale } => format!("ParetoTail({alpha},{scale})"),
            Self::ExampleLogSv { t0 } => format!("ExampleLogSV({t0})"),
            Self::Empirical { samples } => format!("Empirical(n={})", samples.len()),
        }
    }

    /// Tail probability `P(X > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Deterministic { value } => {
                if t < *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::ParetoTail { alpha, scale } => {
                if t <= *scale {
                    1.0
                } else {
                    (scale / t).powf(*alpha)
                }
            }
            Self::ExampleLogSv { .. } => self.ln_tail(t).exp(),
            Self::Empirical { samples } => 1.0 - empirical_cdf(samples, t),
        }
    }

    /// Natural log of the tail; stays accurate where the tail underflows.
    pub fn ln_tail(&self, t: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -rate * t.max(0.0),
            Self::ParetoTail { alpha, scale } => {
                if t <= *scale {
                    0.0
                } else {
                    alpha * (scale.ln() - t.ln())
                }
            }
            Self::ExampleLogSv { t0 } => {
                if t <= *t0 {
                    0.0
                } else {
                    log_sv_phi(t0.ln()) - log_sv_phi(t.ln())
                }
            }
            _ => self.tail(t).ln(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.tail(t)
    }

    /// Density where the law is absolutely continuous.
    pub fn density(&self, t: f64) -> Option<f64> {
        match self {
            Self::Deterministic { .. } => None,
            Self::Empirical { samples } => Some(empirical_density(samples, t)),
            _ => self.hazard(t).map(|h| h * self.tail(t)),
        }
    }

    /// Hazard rate `density / tail`, where defined.
    pub fn hazard(&self, t: f64) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(*rate),
            Self::Deterministic { .. } => None,
            Self::ParetoTail { alpha, scale } => Some(if t <= *scale { 0.0 } else { alpha / t }),
            Self::ExampleLogSv { t0 } => Some(if t <= *t0 {
                0.0
            } else {
                let g = t.ln().ln();
                (1.0 - (g - 1.0) / (g * g)) / t
            }),
            Self::Empirical { samples } => {
                let tail = self.tail(t);
                if tail <= 0.0 {
                    None
                } else {
                    Some(empirical_density(samples, t) / tail)
                }
            }
        }
    }

    /// Supremum of the hazard over `[0, inf)`, when finite and known.
    pub fn hazard_sup(&self) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(*rate),
            Self::ParetoTail { alpha, scale } => Some(alpha / scale),
            Self::ExampleLogSv { t0 } => {
                // The hazard jumps up at t0 and decays afterwards, up to the
                // small bump of the slowly varying factor; scan to be safe.
                let mut sup: f64 = 0.0;
                let mut t = *t0 * (1.0 + 1e-12);
                while t < 1e12 {
                    sup = sup.max(self.hazard(t).unwrap_or(0.0));
                    t *= 1.01;
                }
                Some(sup * (1.0 + 1e-9))
            }
            Self::Deterministic { .. } | Self::Empirical { .. } => None,
        }
    }

    /// Mean interarrival time; `None` when infinite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Deterministic { value } => Some(*value),
            Self::ParetoTail { .. } | Self::ExampleLogSv { .. } => None,
            Self::Empirical { samples } => {
                Some(samples.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / (samples.len() - 1) as f64)
            }
        }
    }

    /// Index of regular variation of the tail when it is `(0, 1]`.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            Self::ParetoTail { alpha, .. } => Some(*alpha),
            Self::ExampleLogSv { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Points where the tail or its derivative is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Exponential { .. } => vec![],
            Self::Deterministic { value } => vec![*value],
            Self::ParetoTail { scale, .. } => vec![*scale],
            Self::ExampleLogSv { t0 } => vec![*t0],
            Self::Empirical { samples } => {
                let mut b = samples.clone();
                b.dedup();
                b
            }
        }
    }

    /// Inverse of the tail: the `x` with `P(X > x) = p`, for `p` in `(0, 1]`.
    pub fn inverse_tail(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p <= 1.0);
        match self {
            Self::Exponential { rate } => -p.ln() / rate,
            Self::Deterministic { value } => *value,
            Self::ParetoTail { alpha, scale } => scale * p.powf(-1.0 / alpha),
            Self::ExampleLogSv { t0 } => self.inverse_ln_tail(p.ln()).max(*t0),
            Self::Empirical { samples } => empirical_quantile(samples, 1.0 - p),
        }
    }

    /// The `x` with `ln P(X > x) = lp`; usable far beyond `f64` tail range.
    pub fn inverse_ln_tail(&self, lp: f64) -> f64 {
        match self {
            Self::ExampleLogSv { t0 } => {
                if lp >= 0.0 {
                    return *t0;
                }
                let u0 = t0.ln();
                let target = log_sv_phi(u0) - lp;
                let u = solve_log_sv_phi(target, u0);
                u.exp()
            }
            Self::ParetoTail { alpha, scale } => scale * (-lp / alpha).exp(),
            Self::Exponential { rate } => -lp / rate,
            _ => self.inverse_tail(lp.exp()),
        }
    }

    /// Draws one interarrival by inverse-transform sampling.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Deterministic { value } => *value,
            _ => self.inverse_tail(open01(rng)),
        }
    }

    /// Draws `X` conditioned on `X > y` from the tail `P(X > x) / P(X > y)`.
    pub fn sample_beyond<R: RngCore + ?Sized>(&self, y: f64, rng: &mut R) -> Result<f64> {
        let lw = open01(rng).ln();
        let ly = self.ln_tail(y);
        if !ly.is_finite() {
            return Err(RcpError::Domain(format!("cannot condition {} on exceeding {y}: tail is zero", self.label())));
        }
        let x = match self {
            Self::Deterministic { value } => *value,
            _ => self.inverse_ln_tail(ly + lw),
        };
        // Rounding can land a hair below y; the conditioned law lives above it.
        Ok(if x > y { x } else { next_up(y) })
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// `phi(u) = u - u / ln u`, so that `ln tail = phi(ln t0) - phi(ln t)`.
fn log_sv_phi(u: f64) -> f64 {
    u - u / u.ln()
}

fn solve_log_sv_phi(target: f64, u_min: f64) -> f64 {
    // phi is increasing for u > 1; bracket then Newton with bisection fallback.
    let mut lo = u_min;
    let mut hi = u_min.max(target + 2.0);
    while log_sv_phi(hi) < target {
        hi *= 2.0;
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = log_sv_phi(u) - target;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let l = u.ln();
        let df = 1.0 - (l - 1.0) / (l * l);
        let mut next = u - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * u {
            return next;
        }
        u = next;
    }
    u
}

fn empirical_quantile(samples: &[f64], u: f64) -> f64 {
    let n = samples.len();
    let pos = u.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let frac = pos - i as f64;
    samples[i] + frac * (samples[i + 1] - samples[i])
}

fn empirical_cdf(samples: &[f64], t: f64) -> f64 {
    let n = samples.len();
    if t < samples[0] {
        return 0.0;
    }
    if t >= samples[n - 1] {
        return 1.0;
    }
    // last index with samples[i] <= t
    let i = samples.partition_point(|&s| s <= t) - 1;
    let width = samples[i + 1] - samples[i];
    let frac = if width > 0.0 { (t - samples[i]) / width } else { 0.0 };
    (i as f64 + frac) / (n - 1) as f64
}

fn empirical_density(samples: &[f64], t: f64) -> f64 {
    let n = samples.len();
    if t < samples[0] || t >= samples[n - 1] {
        return 0.0;
    }
    let i = samples.partition_point(|&s| s <= t) - 1;
    let width = samples[i + 1] - samples[i];
    if width > 0.0 {
        1.0 / ((n - 1) as f64 * width)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_for, tag};
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_inverses() {
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        let mut rng = rng_for(3, tag::TRIAL, &[]);
        assert_eq!(d.sample(&mut rng), 1.0);
        let e = InterarrivalLaw::exponential(2.0).unwrap();
        assert_relative_eq!(e.inverse_tail(0.5), 2f64.ln() / 2.0, epsilon = 1e-15);
        let p = InterarrivalLaw::pareto_tail(0.5, 1.0).unwrap();
        assert_relative_eq!(p.inverse_tail(0.25), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(InterarrivalLaw::exponential(0.0).is_err());
        assert!(InterarrivalLaw::pareto_tail(1.0, 1.0).is_err());
        assert!(InterarrivalLaw::pareto_tail(0.5, -1.0).is_err());
        assert!(InterarrivalLaw::example_log_sv(2.0).is_err());
        assert!(InterarrivalLaw::empirical(vec![2.0, 1.0]).is_err());
        assert!(InterarrivalLaw::empirical(vec![1.0]).is_err());
    }

    #[test]
    fn log_sv_is_continuous_at_t0() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        assert_eq!(law.tail(20.0), 1.0);
        assert_relative_eq!(law.tail(20.0 * (1.0 + 1e-12)), 1.0, epsilon = 1e-9);
        // Direct formula K L(t)/t.
        let l = |t: f64| (t.ln() / t.ln().ln()).exp();
        let k = 20.0 / l(20.0);
        assert_relative_eq!(law.tail(1e6), k * l(1e6) / 1e6, max_relative = 1e-12);
    }

    #[test]
    fn log_sv_inverse_round_trips() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        for &t in &[25.0, 1e3, 1e8, 1e40, 1e120] {
            let lp = law.ln_tail(t);
            assert_relative_eq!(law.inverse_ln_tail(lp), t, max_relative = 1e-10);
        }
    }

    #[test]
    fn empirical_interpolates_quantiles() {
        let law = InterarrivalLaw::empirical(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(law.inverse_tail(1.0), 1.0);
        assert_relative_eq!(law.inverse_tail(0.5), 2.0, epsilon = 1e-12);
        assert_relative_eq!(law.inverse_tail(0.25), 3.0, epsilon = 1e-12);
        assert_relative_eq!(law.tail(3.0), 0.25, epsilon = 1e-12);
        assert_relative_eq!(law.mean().unwrap(), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn hazard_matches_density_over_tail() {
        let law = InterarrivalLaw::pareto_tail(0.7, 2.0).unwrap();
        let t: f64 = 10.0;
        assert_relative_eq!(law.density(t).unwrap(), 0.7 * (0.2f64).powf(0.7) / t, epsilon = 1e-14);
    }

    #[test]
    fn conditional_draw_exceeds_threshold() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        let mut rng = rng_for(9, tag::TRIAL, &[]);
        for _ in 0..1000 {
            let y = 1e50;
            assert!(law.sample_beyond(y, &mut rng).unwrap() > y);
        }
    }

    #[test]
    fn serde_round_trip_rejects_unknown_fields() {
        let law = InterarrivalLaw::pareto_tail(0.7, 1.0).unwrap();
        let s = serde_json::to_string(&law).unwrap();
        assert_eq!(s, r#"{"family":"pareto-tail","alpha":0.7,"scale":1.0}"#);
        let back: InterarrivalLaw = serde_json::from_str(&s).unwrap();
        assert_eq!(back, law);
        let bad = r#"{"family":"exponential","rate":1.0,"shape":2}"#;
        assert!(serde_json::from_str::<InterarrivalLaw>(bad).is_err());
    }
}
