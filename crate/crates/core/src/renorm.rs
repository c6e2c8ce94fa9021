//! Renormalization numerics.
//!
//! Two families of deterministic computations live here:
//!
//! * the multiscale recurrence for crossing probabilities on boxes
//!   `[0, 2^n]^d x [0, b_n]` with `b_n = exp((alpha/theta)^2 n^2)`, together
//!   with the base-case rate `lambda_0` below which it is seeded;
//! * the tunnelling scales `R_{k+1} = R_k + R_k / (ln R_k)^alpha` and the
//!   summed failure bound used to show survival for every positive rate.
//!
//! Box heights reach `e^{10^4}` and more, so everything is carried as
//! natural logarithms.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, RcpError, Result};
use crate::renewal::{integrated_tail_m, theta_min, InterarrivalLaw};

const LN2: f64 = std::f64::consts::LN_2;

/// `ln(e^a + e^b)` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// A positive number given by its natural log, printed in scientific form.
pub fn format_ln(ln_value: f64) -> String {
    if ln_value == f64::NEG_INFINITY {
        return "0".into();
    }
    let l10 = ln_value / std::f64::consts::LN_10;
    let mut exp = l10.floor();
    let mut mant = 10f64.powf(l10 - exp);
    if mant >= 9.999_995 {
        mant = 1.0;
        exp += 1.0;
    }
    format!("{mant:.6}e{exp}")
}

/// Constants fixed by the dimension and the moment exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub d: usize,
    pub theta: f64,
    /// `d ln 2`.
    pub beta: f64,
    /// `(2 d ln 2 + sqrt(theta^2 d ln 2 / 2)) / 2`.
    pub alpha: f64,
    /// `2 (alpha/theta)^2 - beta`; must be negative.
    pub slack_square: f64,
    /// `beta + d ln 2 - alpha`; must be negative.
    pub slack_moment: f64,
}

pub fn derive_constants(d: usize, theta: f64) -> Result<DerivedConstants> {
    if d == 0 {
        return domain("dimension must be at least one");
    }
    let tmin = theta_min(d);
    if !(theta > tmin) {
        return precondition(format!(
            "moment exponent theta = {theta} must exceed sqrt(8 d ln 2) = {tmin} in dimension {d}"
        ));
    }
    let dl = d as f64 * LN2;
    let beta = dl;
    let alpha = 0.5 * (2.0 * dl + (theta * theta * dl / 2.0).sqrt());
    let r = alpha / theta;
    Ok(DerivedConstants { d, theta, beta, alpha, slack_square: 2.0 * r * r - beta, slack_moment: beta + dl - alpha })
}

/// Box sizes `a_n = 2^n`, `ln b_n = (alpha/theta)^2 n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub constants: DerivedConstants,
    /// Smallest `n >= 1` from which `b_n / 2 > 3 b_{n-1}`.
    pub n_min: u32,
}

impl ScaleSchedule {
    pub fn new(constants: DerivedConstants) -> Self {
        let c = (constants.alpha / constants.theta).powi(2);
        // b_n / b_{n-1} = exp(c (2n - 1)) > 6
        let n_min = ((6f64.ln() / c + 1.0) / 2.0).floor() as u32 + 1;
        Self { constants, n_min: n_min.max(1) }
    }

    fn c(&self) -> f64 {
        (self.constants.alpha / self.constants.theta).powi(2)
    }

    pub fn ln_a(&self, n: u32) -> f64 {
        n as f64 * LN2
    }

    pub fn ln_b(&self, n: u32) -> f64 {
        self.c() * (n as f64).powi(2)
    }

    /// `ln(b_n / b_{n-1})`.
    pub fn ln_ratio(&self, n: u32) -> f64 {
        self.c() * (2.0 * n as f64 - 1.0)
    }

    /// `ln f(b_{n-1}) = theta sqrt(ln b_{n-1}) = alpha (n - 1)`.
    pub fn ln_f_b_prev(&self, n: u32) -> f64 {
        self.constants.alpha * (n as f64 - 1.0)
    }
}

/// How the starting scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartRule {
    /// Square term bounded with exponent `2 (alpha/theta)^2 - beta`.
    AsStated,
    /// Square term bounded with exponent `4 (alpha/theta)^2 - beta`, which is
    /// what `(b_n / b_{n-1})^2 u_{n-1}^2` actually produces.
    Corrected,
}

/// Constants of the recurrence `u_n = h_n + t~_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceState {
    /// Prefactor of `h_n` per unit `ceil(b_n/b_{n-1})^2`: `4 * 36^{d-1}`.
    pub c_spatial: f64,
    /// `(3^d + 2 d 3^{d-1})^2`, prefactor of the squared term in `t~_n`.
    pub c_temporal: f64,
    /// Constant of the gap-probability bound `P(no mark in [t, t+u]) <= C / f(u)`.
    pub c_moment: f64,
}

impl RecurrenceState {
    pub fn new(d: usize, c_moment: f64) -> Result<Self> {
        if !(c_moment >= 0.0 && c_moment.is_finite()) {
            return domain(format!("moment constant must be finite and >= 0, got {c_moment}"));
        }
        let di = d as i32;
        Ok(Self {
            c_spatial: 4.0 * 36f64.powi(di - 1),
            c_temporal: (3f64.powi(di) + 2.0 * d as f64 * 3f64.powi(di - 1)).powi(2),
            c_moment,
        })
    }

    /// `C(d)` in `u_n <= C(d) (b_n/b_{n-1})^2 u_{n-1}^2 + ...`, using
    /// `ceil(x) <= 2x` for `x >= 1`.
    pub fn c_dimension(&self) -> f64 {
        4.0 * self.c_spatial + self.c_temporal
    }
}

/// The two quarter-bound expressions at scale `n`, as natural logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterBounds {
    pub ln_square: f64,
    pub ln_moment: f64,
}

impl QuarterBounds {
    pub fn hold(&self) -> bool {
        let q = 0.25f64.ln();
        self.ln_square <= q && self.ln_moment <= q
    }
}

pub fn quarter_bounds(schedule: &ScaleSchedule, state: &RecurrenceState, n: u32, rule: StartRule) -> QuarterBounds {
    let k = &schedule.constants;
    let c = schedule.c();
    let nf = n as f64;
    let ln_square = match rule {
        StartRule::AsStated => state.c_dimension().ln() + 2.0 * k.beta - c + (2.0 * c - k.beta) * nf,
        StartRule::Corrected => state.c_dimension().ln() + 2.0 * k.beta - 2.0 * c + (4.0 * c - k.beta) * nf,
    };
    let ln_moment = state.c_moment.ln() + k.alpha + (k.beta + k.d as f64 * LN2 - k.alpha) * nf;
    QuarterBounds { ln_square, ln_moment }
}

/// Smallest `n >= n_min` from which both quarter-bounds hold for every
/// larger scale. Fails when the exponents do not make them eventually hold
/// or when `n` would exceed `n_max`.
pub fn find_n0(schedule: &ScaleSchedule, state: &RecurrenceState, rule: StartRule, n_max: u32) -> Result<u32> {
    let k = &schedule.constants;
    let c = schedule.c();
    let slope_square = match rule {
        StartRule::AsStated => 2.0 * c - k.beta,
        StartRule::Corrected => 4.0 * c - k.beta,
    };
    if slope_square >= 0.0 {
        return Err(RcpError::NoSolution(format!(
            "square-term exponent {slope_square} is not negative; the quarter bound never holds"
        )));
    }
    // Both expressions are affine in n with non-positive slope, so the
    // first n where both hold is the answer.
    for n in schedule.n_min..=n_max {
        if quarter_bounds(schedule, state, n, rule).hold() {
            return Ok(n);
        }
    }
    Err(RcpError::NoSolution(format!("no starting scale up to {n_max}; the moment constant may be too large")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceStep {
    pub n: u32,
    pub ln_u: f64,
    /// `ln e^{-beta n}`.
    pub ln_target: f64,
    pub pass: bool,
    pub ln_square_term: f64,
    pub ln_moment_term: f64,
    pub quarter_bounds_hold: bool,
}

/// Iterates the recurrence as an equality from `u_{n0}` for `steps` scales.
///
/// `u_n = [4 36^{d-1} ceil(b_n/b_{n-1})^2 + (3^d + 2d 3^{d-1})^2] u_{n-1}^2
///        + C 2^{dn} / f(b_{n-1})`, clamped to 1. The first entry is the
/// start value itself.
pub fn iterate_recurrence(
    schedule: &ScaleSchedule,
    state: &RecurrenceState,
    n0: u32,
    u_n0: f64,
    steps: u32,
    rule: StartRule,
) -> Result<Vec<RecurrenceStep>> {
    if !(0.0..=1.0).contains(&u_n0) {
        return domain(format!("start value must lie in [0, 1], got {u_n0}"));
    }
    let k = &schedule.constants;
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut ln_u = u_n0.ln();
    let first_target = -k.beta * n0 as f64;
    out.push(RecurrenceStep {
        n: n0,
        ln_u,
        ln_target: first_target,
        pass: ln_u <= first_target,
        ln_square_term: f64::NEG_INFINITY,
        ln_moment_term: f64::NEG_INFINITY,
        quarter_bounds_hold: quarter_bounds(schedule, state, n0, rule).hold(),
    });
    for n in n0 + 1..=n0 + steps {
        let lr = schedule.ln_ratio(n);
        let ln_ceil_sq = 2.0 * if lr > 30.0 { lr } else { lr.exp().ceil().ln() };
        let ln_pref = log_add(state.c_spatial.ln() + ln_ceil_sq, state.c_temporal.ln());
        let ln_square_term = ln_pref + 2.0 * ln_u;
        let ln_moment_term = state.c_moment.ln() + k.d as f64 * n as f64 * LN2 - schedule.ln_f_b_prev(n);
        ln_u = log_add(ln_square_term, ln_moment_term).min(0.0);
        let ln_target = -k.beta * n as f64;
        out.push(RecurrenceStep {
            n,
            ln_u,
            ln_target,
            pass: ln_u <= ln_target,
            ln_square_term,
            ln_moment_term,
            quarter_bounds_hold: quarter_bounds(schedule, state, n, rule).hold(),
        });
    }
    Ok(out)
}

/// Full record of a recurrence run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceAudit {
    pub constants: DerivedConstants,
    pub state: RecurrenceState,
    pub rule: StartRule,
    pub n_min: u32,
    pub n0: u32,
    /// Exponent of the squared term actually produced by the recurrence.
    pub square_exponent_exact: f64,
    pub steps: Vec<RecurrenceStep>,
    pub first_failure: Option<u32>,
    pub certified: bool,
}

/// Chooses `n0`, starts from `u_{n0} = e^{-beta n0}` and iterates.
pub fn run_recurrence(d: usize, theta: f64, c_moment: f64, steps: u32, rule: StartRule) -> Result<RecurrenceAudit> {
    let constants = derive_constants(d, theta)?;
    let schedule = ScaleSchedule::new(constants);
    let state = RecurrenceState::new(d, c_moment)?;
    let n0 = find_n0(&schedule, &state, rule, 1_000_000)?;
    let u0 = (-constants.beta * n0 as f64).exp();
    let steps = iterate_recurrence(&schedule, &state, n0, u0, steps, rule)?;
    let first_failure = steps.iter().find(|s| !s.pass).map(|s| s.n);
    let c = schedule.c();
    Ok(RecurrenceAudit {
        constants,
        state,
        rule,
        n_min: schedule.n_min,
        n0,
        square_exponent_exact: 4.0 * c - constants.beta,
        certified: first_failure.is_none(),
        first_failure,
        steps,
    })
}

/// Base-case rate bound and its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda0 {
    pub n0: u32,
    pub ln_b_n0: f64,
    /// Directed edges of one orientation in `[0, 2^{n0}]^d`: `d 2^{n0} (2^{n0}+1)^{d-1}`.
    pub ln_edges: f64,
    pub ln_lambda0: f64,
    /// `lambda_0` in scientific notation; it underflows `f64`.
    pub lambda0: String,
}

/// `lambda_0 = -ln(1 - e^{-beta n0} / 4) / (b_{n0} N)`.
pub fn lambda0_bound(schedule: &ScaleSchedule, n0: u32) -> Result<Lambda0> {
    let k = &schedule.constants;
    if n0 == 0 {
        return domain("starting scale must be positive");
    }
    let nf = n0 as f64;
    let ln_edges = (k.d as f64).ln() + nf * LN2 + (k.d as f64 - 1.0) * (2f64.powf(nf) + 1.0).ln();
    let x = 0.25 * (-k.beta * nf).exp();
    let ln_num = if x > 0.0 { (-(-x).ln_1p()).ln() } else { 0.25f64.ln() - k.beta * nf };
    let ln_b = schedule.ln_b(n0);
    let ln_lambda0 = ln_num - ln_b - ln_edges;
    if !ln_lambda0.is_finite() {
        return Err(RcpError::NoSolution("base-case inequality has no positive solution".into()));
    }
    Ok(Lambda0 { n0, ln_b_n0: ln_b, ln_edges, ln_lambda0, lambda0: format_ln(ln_lambda0) })
}

/// `m(t / (ln t)^a) / m(t)` for the law's integrated tail.
pub fn integrated_tail_ratio(law: &InterarrivalLaw, t: f64, a: f64) -> Result<f64> {
    if !(t > 1.0) {
        return domain(format!("ratio needs t > 1, got {t}"));
    }
    Ok(integrated_tail_m(law, t / t.ln().powf(a))? / integrated_tail_m(law, t)?)
}

/// Scales `R_k` of the tunnelling construction, in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelSchedule {
    pub alpha_scale: f64,
    /// `l_k = ln R_k`, `k = 0..=K`.
    pub ln_r: Vec<f64>,
    /// `M_k = ln r_k` with `r_0 = R_0` and `r_k = R_k - R_{k-1}`.
    pub m: Vec<f64>,
}

pub fn tunnel_schedule(ln_r0: f64, alpha_scale: f64, depth: usize) -> Result<TunnelSchedule> {
    if !(ln_r0 > 1.0) {
        return domain(format!("R_0 must exceed e (ln R_0 = {ln_r0})"));
    }
    if !(alpha_scale > 0.0 && alpha_scale < 1.0) {
        return precondition(format!("scale exponent must lie in (0, 1), got {alpha_scale}"));
    }
    let mut ln_r = vec![ln_r0];
    let mut m = vec![ln_r0];
    for k in 0..depth {
        let l = ln_r[k];
        ln_r.push(l + (-alpha_scale * l.ln()).exp().ln_1p());
        m.push(l - alpha_scale * l.ln());
    }
    Ok(TunnelSchedule { alpha_scale, ln_r, m })
}

impl TunnelSchedule {
    pub fn depth(&self) -> usize {
        self.ln_r.len() - 1
    }
}

/// Whether `ln R_k >= (ln R_0 + k)^beta_l` for every level of the schedule.
pub fn ell_growth_check(schedule: &TunnelSchedule, beta_l: f64) -> Result<bool> {
    if !(beta_l > 0.0 && beta_l < 1.0 / (1.0 + schedule.alpha_scale)) {
        return precondition(format!(
            "growth exponent must lie in (0, 1/(1+alpha)) = (0, {}), got {beta_l}",
            1.0 / (1.0 + schedule.alpha_scale)
        ));
    }
    let l0 = schedule.ln_r[0];
    Ok(schedule.ln_r.iter().enumerate().all(|(k, &l)| l >= (l0 + k as f64).powf(beta_l)))
}

/// Default geometric parameter: midpoint of `(e^{-alpha}, 1)`.
pub fn default_theta_geo(alpha_scale: f64) -> f64 {
    0.5 * (1.0 + (-alpha_scale).exp())
}

/// The four failure terms at one level, as natural logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelTerms {
    pub k: usize,
    pub ln_r: f64,
    pub m: f64,
    /// `theta_geo^{M_k}`: too many columns before a long overshoot.
    pub ln_geometric: f64,
    /// `M_k e^{-lambda r_k / M_k}`.
    pub ln_short_age: f64,
    /// `M_k^2 e^{-lambda M_k}`.
    pub ln_slow_path: f64,
    /// `2 M_k^4 / L(R_k)`.
    pub ln_recent_cure: f64,
    pub ln_total: f64,
}

pub fn tunnel_terms(schedule: &TunnelSchedule, k: usize, lambda: f64, theta_geo: f64) -> TunnelTerms {
    let l = schedule.ln_r[k];
    let m = schedule.m[k];
    let ln_m = m.ln();
    let ln_geometric = m * theta_geo.ln();
    let ln_short_age = ln_m - lambda * (m - ln_m).exp();
    let ln_slow_path = 2.0 * ln_m - lambda * m;
    let ln_recent_cure = LN2 + 4.0 * ln_m - l / l.ln();
    let ln_total = log_add(log_add(ln_geometric, ln_short_age), log_add(ln_slow_path, ln_recent_cure));
    TunnelTerms { k, ln_r: l, m, ln_geometric, ln_short_age, ln_slow_path, ln_recent_cure, ln_total }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelBound {
    pub lambda: f64,
    pub theta_geo: f64,
    pub terms: Vec<TunnelTerms>,
    /// Sum over the computed levels.
    pub partial_sum: f64,
    /// Largest consecutive ratio over the last ten levels.
    pub tail_ratio: f64,
    /// Geometric majorant of the remaining levels; infinite when the ratio is not below one.
    pub tail: f64,
    pub sum: f64,
}

pub fn tunnel_bound_sum(schedule: &TunnelSchedule, lambda: f64, theta_geo: f64) -> Result<TunnelBound> {
    if !(lambda > 0.0) {
        return domain(format!("rate must be positive, got {lambda}"));
    }
    let lo = (-schedule.alpha_scale).exp();
    if !(theta_geo > lo && theta_geo < 1.0) {
        return precondition(format!("geometric parameter must lie in ({lo}, 1), got {theta_geo}"));
    }
    if schedule.depth() < 10 {
        return domain("tunnel bound needs at least ten levels to estimate the tail");
    }
    let terms: Vec<TunnelTerms> =
        (0..=schedule.depth()).map(|k| tunnel_terms(schedule, k, lambda, theta_geo)).collect();
    let partial_sum: f64 = terms.iter().map(|t| t.ln_total.exp()).sum();
    let last = &terms[terms.len() - 11..];
    let tail_ratio = last.windows(2).map(|w| (w[1].ln_total - w[0].ln_total).exp()).fold(0.0, f64::max);
    let tail = if tail_ratio < 1.0 {
        terms.last().expect("non-empty").ln_total.exp() * tail_ratio / (1.0 - tail_ratio)
    } else {
        f64::INFINITY
    };
    Ok(TunnelBound { lambda, theta_geo, terms, partial_sum, tail_ratio, tail, sum: partial_sum + tail })
}

/// Result of the search for a starting scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R0Search {
    pub lambda: f64,
    pub ln_r0: f64,
    pub sum: f64,
}

/// Smallest `ln R_0` on `grid` whose bound sum is below `eps`.
pub fn find_r0(
    lambda: f64,
    eps: f64,
    alpha_scale: f64,
    theta_geo: f64,
    depth: usize,
    grid: &[f64],
) -> Result<R0Search> {
    for &ln_r0 in grid {
        let schedule = tunnel_schedule(ln_r0, alpha_scale, depth)?;
        let bound = tunnel_bound_sum(&schedule, lambda, theta_geo)?;
        if bound.sum < eps {
            return Ok(R0Search { lambda, ln_r0, sum: bound.sum });
        }
    }
    Err(RcpError::NoSolution(format!("no R_0 found in grid for lambda = {lambda}")))
}

/// Default search grid: `ln R_0 = 1.5, 2.0, ..., 600`.
pub fn default_r0_grid() -> Vec<f64> {
    (3..=1200).map(|i| i as f64 * 0.5).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_in_dimension_one() {
        let c = derive_constants(1, 2.5).unwrap();
        assert_relative_eq!(c.beta, LN2, epsilon = 1e-15);
        // independent arithmetic: alpha = (2 ln2 + sqrt(6.25 ln2 / 2)) / 2
        let alpha = (2.0 * LN2 + (6.25 * LN2 / 2.0f64).sqrt()) / 2.0;
        assert_relative_eq!(c.alpha, alpha, epsilon = 1e-15);
        assert!((c.alpha - 1.428_984).abs() < 1e-4);
        assert!((c.slack_square + 0.0397).abs() < 1e-4);
        assert!((c.slack_moment + 0.0427).abs() < 1e-4);
        assert!(derive_constants(1, theta_min(1)).is_err());
        let c2 = derive_constants(2, 3.5).unwrap();
        assert!(c2.slack_square < 0.0 && c2.slack_moment < 0.0);
    }

    #[test]
    fn slacks_vanish_at_threshold() {
        for d in 1..=3 {
            let t = theta_min(d) * (1.0 + 1e-9);
            let c = derive_constants(d, t).unwrap();
            assert!(c.slack_square.abs() < 1e-7 && c.slack_moment.abs() < 1e-7);
            assert_relative_eq!(c.alpha, 2.0 * d as f64 * LN2, max_relative = 1e-7);
        }
    }

    #[test]
    fn zero_start_stays_zero() {
        let c = derive_constants(1, 2.5).unwrap();
        let s = ScaleSchedule::new(c);
        let st = RecurrenceState::new(1, 0.0).unwrap();
        let steps = iterate_recurrence(&s, &st, 10, 0.0, 20, StartRule::AsStated).unwrap();
        assert!(steps.iter().all(|x| x.ln_u == f64::NEG_INFINITY && x.pass));
    }

    #[test]
    fn unit_start_fails_at_once() {
        let c = derive_constants(1, 6.0).unwrap();
        let s = ScaleSchedule::new(c);
        let st = RecurrenceState::new(1, 1.0).unwrap();
        let n0 = find_n0(&s, &st, StartRule::Corrected, 100_000).unwrap();
        let steps = iterate_recurrence(&s, &st, n0, 1.0, 3, StartRule::Corrected).unwrap();
        assert!(!steps[1].pass);
        assert_eq!(steps[1].ln_u, 0.0);
    }

    #[test]
    fn corrected_rule_certifies_at_large_theta() {
        let audit = run_recurrence(1, 8.0, 1.0, 50, StartRule::Corrected).unwrap();
        assert!(audit.certified, "first failure {:?}", audit.first_failure);
        assert!(audit.square_exponent_exact < 0.0);
    }

    #[test]
    fn lambda0_closed_form_and_monotone() {
        let c = derive_constants(1, 2.5).unwrap();
        let s = ScaleSchedule::new(c);
        let l = lambda0_bound(&s, 3).unwrap();
        let b3 = s.ln_b(3).exp();
        let direct = -(1.0 - 0.25 * (-LN2 * 3.0f64).exp()).ln() / (b3 * 8.0);
        assert_relative_eq!(l.ln_lambda0.exp(), direct, max_relative = 1e-12);
        let mut prev = f64::INFINITY;
        for n0 in 1..300 {
            let l = lambda0_bound(&s, n0).unwrap();
            assert!(l.ln_lambda0 <= prev);
            prev = l.ln_lambda0;
        }
    }

    #[test]
    fn formatting_of_tiny_numbers() {
        assert_eq!(format_ln(1000f64.ln()), "1.000000e3");
        assert_eq!(format_ln(-10.0 * std::f64::consts::LN_10), "1.000000e-10");
    }

    #[test]
    fn tunnel_schedule_arithmetic() {
        assert!(tunnel_schedule(3.0, 1.0, 3).is_err());
        assert!(tunnel_schedule(1.0, 0.5, 3).is_err());
        let s = tunnel_schedule(3.0, 0.5, 3).unwrap();
        assert_relative_eq!(s.ln_r[1].exp(), 3f64.exp() * (1.0 + 3f64.powf(-0.5)), max_relative = 1e-12);
        assert_relative_eq!(s.ln_r[1].exp(), 31.68, epsilon = 0.01);
        // r_1 = R_1 - R_0
        assert_relative_eq!(s.m[1].exp(), s.ln_r[1].exp() - s.ln_r[0].exp(), max_relative = 1e-12);
        for w in s.ln_r.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn growth_check_rejects_bad_exponent() {
        let s = tunnel_schedule(3.0, 0.5, 10).unwrap();
        assert!(ell_growth_check(&s, 0.7).is_err());
    }

    #[test]
    fn find_r0_for_small_rate() {
        let tg = default_theta_geo(0.5);
        let r = find_r0(0.1, 1.0, 0.5, tg, 200, &default_r0_grid()).unwrap();
        assert!(r.sum < 1.0 && r.ln_r0.is_finite());
    }
}
