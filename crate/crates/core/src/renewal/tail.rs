//! The integrated tail `m(t) = int_0^t P(X > s) ds` and its inverse.

use serde::{Deserialize, Serialize};

use super::InterarrivalLaw;
use crate::error::{domain, RcpError, Result};
use crate::quadrature::{integrate, GaussLegendre};

/// Tolerances for the renewal numerics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Relative tolerance for `m(t)`.
    pub m_rel_tol: f64,
    /// Relative tolerance for the negligibility integral.
    pub negligibility_rel_tol: f64,
    /// Relative tolerance (against the root) for the inverse of `m`.
    pub inverse_rel_tol: f64,
    pub max_segments: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self { m_rel_tol: 1e-8, negligibility_rel_tol: 1e-6, inverse_rel_tol: 1e-9, max_segments: 4000 }
    }
}

/// `m(t)` with default tolerances.
pub fn integrated_tail_m(law: &InterarrivalLaw, t: f64) -> Result<f64> {
    integrated_tail_m_with(law, t, &NumericsConfig::default())
}

pub fn integrated_tail_m_with(law: &InterarrivalLaw, t: f64, cfg: &NumericsConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("integrated tail needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if let InterarrivalLaw::Empirical { samples } = law {
        return Ok(empirical_m(samples, t));
    }
    let mut cuts = vec![0.0];
    cuts.extend(law.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t));
    if t > 1.0 && !cuts.contains(&1.0) {
        cuts.push(1.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.push(t);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += segment(law, w[0], w[1], cfg)?;
    }
    Ok(total)
}

fn segment(law: &InterarrivalLaw, a: f64, b: f64, cfg: &NumericsConfig) -> Result<f64> {
    let q = if a > 0.0 && b / a > 4.0 {
        integrate(|v: f64| law.tail(v.exp()) * v.exp(), a.ln(), b.ln(), 0.0, cfg.m_rel_tol * 0.1, cfg.max_segments)
    } else {
        integrate(|s| law.tail(s), a, b, 0.0, cfg.m_rel_tol * 0.1, cfg.max_segments)
    };
    if !q.converged && q.abs_error > cfg.m_rel_tol * q.value.abs() {
        return Err(RcpError::NoSolution(format!(
            "quadrature of the tail over [{a}, {b}] did not reach tolerance (error {})",
            q.abs_error
        )));
    }
    Ok(q.value)
}

/// Splits `[a, b]` at the interior kinks.
pub(crate) fn segment_bounds(a: f64, b: f64, kinks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn empirical_m(samples: &[f64], t: f64) -> f64 {
    // The tail is piecewise linear, so the trapezoid rule is exact.
    let n = samples.len();
    let mut total = t.min(samples[0]);
    for i in 0..n - 1 {
        let (a, b) = (samples[i], samples[i + 1]);
        if a >= t {
            break;
        }
        if b == a {
            continue;
        }
        let fa = 1.0 - i as f64 / (n - 1) as f64;
        let fb = 1.0 - (i + 1) as f64 / (n - 1) as f64;
        let hi = b.min(t);
        let fhi = fa + (fb - fa) * (hi - a) / (b - a);
        total += 0.5 * (fa + fhi) * (hi - a);
    }
    total
}

/// Supremum of `m`, i.e. the mean, or infinity.
pub fn integrated_tail_sup(law: &InterarrivalLaw) -> f64 {
    law.mean().unwrap_or(f64::INFINITY)
}

/// Inverse of `m` by bisection on `ln t`.
pub fn inverse_integrated_tail(law: &InterarrivalLaw, y: f64) -> Result<f64> {
    inverse_integrated_tail_with(law, y, &NumericsConfig::default())
}

pub fn inverse_integrated_tail_with(law: &InterarrivalLaw, y: f64, cfg: &NumericsConfig) -> Result<f64> {
    let sup = integrated_tail_sup(law);
    if !(y >= 0.0) || y >= sup {
        return domain(format!("inverse integrated tail needs 0 <= y < {sup}, got {y}"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    // m(t) <= t, so t >= y; grow the upper end geometrically.
    let mut lo = y;
    if integrated_tail_m_with(law, lo, cfg)? >= y {
        return Ok(lo);
    }
    let mut hi = 2.0 * y;
    while integrated_tail_m_with(law, hi, cfg)? < y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return domain(format!("inverse integrated tail of {y} overflows"));
        }
    }
    while hi - lo > cfg.inverse_rel_tol * hi {
        let mid = if hi / lo < 1.5 { 0.5 * (lo + hi) } else { (lo * hi).sqrt() };
        if integrated_tail_m_with(law, mid, cfg)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tabulated `m` on a grid in `ln t`, for fast repeated evaluation and
/// inversion far into the tail.
///
/// Cells are integrated with an 8-point Gauss-Legendre rule in the variable
/// `u = ln t`; law breakpoints are grid nodes so every cell is smooth.
#[derive(Debug, Clone)]
pub struct IntegratedTailTable {
    law: InterarrivalLaw,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl IntegratedTailTable {
    pub const LN_T_MIN: f64 = -14.0;

    /// Table covering `t` in `[e^-14, e^ln_t_max]` with cell width `step` in `ln t`.
    pub fn new(law: &InterarrivalLaw, ln_t_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(ln_t_max > Self::LN_T_MIN) {
            return domain("table needs a positive step and ln_t_max above the table floor");
        }
        let mut nodes: Vec<f64> = Vec::new();
        let n = ((ln_t_max - Self::LN_T_MIN) / step).ceil() as usize;
        for i in 0..=n {
            nodes.push((Self::LN_T_MIN + i as f64 * step).min(ln_t_max));
        }
        for b in law.breakpoints() {
            let u = b.ln();
            if u > Self::LN_T_MIN && u < ln_t_max {
                nodes.push(u);
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let rule = GaussLegendre::new(8);
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = integrated_tail_m(law, nodes[0].exp())?;
        cumulative.push(acc);
        for w in nodes.windows(2) {
            acc += rule.integrate(|u| law.tail(u.exp()) * u.exp(), w[0], w[1]);
            cumulative.push(acc);
        }
        Ok(Self { law: law.clone(), nodes, cumulative, rule })
    }

    pub fn ln_t_max(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn m_max(&self) -> f64 {
        *self.cumulative.last().expect("non-empty grid")
    }

    fn integrand(&self, u: f64) -> f64 {
        self.law.tail(u.exp()) * u.exp()
    }

    /// `m(t)` for `t` inside the table range; falls back to adaptive
    /// quadrature below it.
    pub fn m(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("integrated tail needs t >= 0, got {t}"));
        }
        let u = t.ln();
        if u <= self.nodes[0] {
            return integrated_tail_m(&self.law, t);
        }
        if u > self.ln_t_max() {
            return domain(format!("t = {t} beyond table range e^{}", self.ln_t_max()));
        }
        let i = self.nodes.partition_point(|&x| x <= u) - 1;
        Ok(self.cumulative[i] + self.rule.integrate(|v| self.integrand(v), self.nodes[i], u))
    }

    /// `ln m^{-1}(y)`.
    pub fn inverse_ln(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return domain(format!("inverse integrated tail needs y >= 0, got {y}"));
        }
        if y <= self.cumulative[0] {
            return Ok(inverse_integrated_tail(&self.law, y)?.ln());
        }
        if y >= self.m_max() {
            return domain(format!("y = {y} beyond table range (m max {})", self.m_max()));
        }
        let i = self.cumulative.partition_point(|&c| c <= y) - 1;
        let (mut lo, mut hi) = (self.nodes[i], self.nodes[i + 1]);
        let base = self.cumulative[i];
        let mut u = lo + (hi - lo) * (y - base) / (self.cumulative[i + 1] - base);
        for _ in 0..100 {
            let g = base + self.rule.integrate(|v| self.integrand(v), self.nodes[i], u) - y;
            if g > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = self.integrand(u);
            let mut next = if d > 0.0 { u - g / d } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() < 1e-14 * u.abs().max(1.0) || hi - lo < 1e-14 * u.abs().max(1.0) {
                return Ok(next);
            }
            u = next;
        }
        Ok(u)
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.inverse_ln(y).map(f64::exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let e = InterarrivalLaw::exponential(1.0).unwrap();
        assert_relative_eq!(integrated_tail_m(&e, 1.0).unwrap(), 1.0 - (-1.0f64).exp(), max_relative = 1e-10);
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        for t in [0.0, 0.3, 1.0, 2.0, 1e6] {
            assert_relative_eq!(integrated_tail_m(&d, t).unwrap(), t.min(1.0), epsilon = 1e-12);
        }
        let p = InterarrivalLaw::pareto_tail(0.5, 1.0).unwrap();
        // 1 + int_1^t s^-1/2 ds = 2 sqrt(t) - 1
        assert_relative_eq!(integrated_tail_m(&p, 1e4).unwrap(), 199.0, max_relative = 1e-9);
    }

    #[test]
    fn inverse_round_trip() {
        let p = InterarrivalLaw::pareto_tail(0.5, 1.0).unwrap();
        let t = inverse_integrated_tail(&p, 199.0).unwrap();
        assert_relative_eq!(t, 1e4, max_relative = 1e-8);
        let d = InterarrivalLaw::deterministic(1.0).unwrap();
        assert_relative_eq!(inverse_integrated_tail(&d, 0.4).unwrap(), 0.4, max_relative = 1e-8);
        assert!(inverse_integrated_tail(&d, 1.0).is_err());
    }

    #[test]
    fn empirical_exact() {
        let law = InterarrivalLaw::empirical(vec![1.0, 3.0]).unwrap();
        // tail 1 on [0,1], linear 1 -> 0 on [1,3]
        assert_relative_eq!(integrated_tail_m(&law, 2.0).unwrap(), 1.75, epsilon = 1e-14);
        assert_relative_eq!(integrated_tail_m(&law, 5.0).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn table_matches_adaptive() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        let table = IntegratedTailTable::new(&law, 60.0, 0.02).unwrap();
        for t in [0.5, 20.0, 21.0, 1e3, 1e6, 1e12, 1e25] {
            let a = integrated_tail_m(&law, t).unwrap();
            assert_relative_eq!(table.m(t).unwrap(), a, max_relative = 1e-9);
            assert_relative_eq!(table.inverse(a).unwrap(), t, max_relative = 1e-9);
        }
    }
}
