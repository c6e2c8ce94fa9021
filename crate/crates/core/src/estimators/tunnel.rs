//! Finite-depth tunnelling trial on the half line of columns `0, 1, 2, ...`.
//!
//! Level `k` looks at time `R_k` for the first column beyond `L_k` whose
//! overshoot at `R_k` exceeds `r_{k+1} = R_{k+1} - R_k`; that column is
//! `L_{k+1}`. The infection must then travel from `L_k` to `L_{k+1}` along
//! the rectangle `[L_k, L_{k+1}] x [R_k - V_k, R_k]`, which is free of cures
//! by the choice of `V_k`. Columns are sampled lazily, each at the single
//! time at which it is inspected.
//!
//! Times reach `e^150` and beyond, so each level is handled in its own
//! local time frame starting at `R_k - V_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, EstimateResult};
use crate::error::{domain, precondition, RcpError, Result};
use crate::graphical::{GraphicalSample, SpaceTimeBox};
use crate::paths::{config_at, Configuration};
use crate::renewal::{integrated_tail_m, IntegratedTailTable, InterarrivalLaw};
use crate::renorm::{tunnel_schedule, TunnelSchedule};
use crate::seed::{exponential, open01, rng_for, tag, Rng};

/// How the age and overshoot of a column at time `R` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ColumnSampling {
    /// Run the renewal process from 0 past `R`.
    Exact,
    /// Limit law for tails with slowly varying integrated tail: the age is
    /// `m^{-1}(U m(R))` and the overshoot is the residual of an interarrival
    /// conditioned to exceed the age.
    Asymptotic,
    /// Exact while `R / m(R)` (the mean number of marks) stays below
    /// `exact_limit`, asymptotic beyond when the law allows it.
    Auto { exact_limit: f64 },
}

impl Default for ColumnSampling {
    fn default() -> Self {
        Self::Auto { exact_limit: 1e5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelConfig {
    /// Transmission rate; `f64::INFINITY` disables the path check.
    pub lambda: f64,
    pub ln_r0: f64,
    pub alpha_scale: f64,
    pub depth: usize,
    #[serde(default = "default_budget")]
    pub column_budget: usize,
    #[serde(default)]
    pub sampling: ColumnSampling,
    /// Draw the first gap at the origin conditioned to exceed `R_0`.
    #[serde(default = "default_true")]
    pub condition_first_gap: bool,
}

fn default_budget() -> usize {
    1_000_000
}

fn default_true() -> bool {
    true
}

impl TunnelConfig {
    pub fn new(lambda: f64, ln_r0: f64, alpha_scale: f64, depth: usize) -> Self {
        Self {
            lambda,
            ln_r0,
            alpha_scale,
            depth,
            column_budget: default_budget(),
            sampling: ColumnSampling::default(),
            condition_first_gap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// The first interarrival at the origin does not exceed `R_0`.
    FirstGap,
    /// No long overshoot among the next `M_k` columns.
    TooManyColumns,
    /// A cure mark falls inside the rectangle.
    CureInRectangle,
    /// The rate-`lambda` path does not cross the rectangle in time.
    SlowPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub k: usize,
    pub ln_r: f64,
    /// `M_k = ln r_k`.
    pub m: f64,
    /// `L_k`.
    pub start_column: u64,
    /// `L_{k+1}` when found.
    pub end_column: Option<u64>,
    /// Age and overshoot at `R_k` of columns `L_k + 1, ...` in order.
    pub columns: Vec<(f64, f64)>,
    /// `V_k`, when `L_{k+1}` was found.
    pub v: Option<f64>,
    /// Arrival times of the path at each column, relative to `R_k - V_k`.
    pub path_times: Vec<f64>,
    pub failure: Option<FailureKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelOutcome {
    pub success: bool,
    pub failure: Option<(usize, FailureKind)>,
    pub first_gap: f64,
    pub levels: Vec<LevelDiagnostics>,
    pub columns_used: usize,
    /// `ln R_k` for `k = 0..=K`.
    pub ln_r: Vec<f64>,
    /// `ln r_k`, with `r_0 = R_0`.
    pub m: Vec<f64>,
}

/// Shared state for a batch of trials.
struct Tunnel {
    law: InterarrivalLaw,
    config: TunnelConfig,
    schedule: TunnelSchedule,
    table: Option<IntegratedTailTable>,
}

impl Tunnel {
    fn new(law: &InterarrivalLaw, config: &TunnelConfig) -> Result<Self> {
        law.validate()?;
        if !(config.lambda > 0.0) {
            return domain(format!("rate must be positive (or infinite), got {}", config.lambda));
        }
        if config.depth == 0 {
            return domain("depth must be at least 1");
        }
        let schedule = tunnel_schedule(config.ln_r0, config.alpha_scale, config.depth)?;
        let slowly_varying = law.tail_index() == Some(1.0);
        let table = match config.sampling {
            ColumnSampling::Exact => None,
            ColumnSampling::Asymptotic if !slowly_varying => {
                return precondition(format!(
                    "asymptotic column sampling needs a tail of index 1 with slowly varying integrated tail; {} does not qualify",
                    law.label()
                ));
            }
            ColumnSampling::Auto { exact_limit } if !(exact_limit > 0.0) => {
                return domain(format!("exact_limit must be positive, got {exact_limit}"));
            }
            ColumnSampling::Auto { .. } if !slowly_varying => None,
            _ => {
                let top = schedule.ln_r.last().copied().unwrap_or(config.ln_r0) + 0.5;
                Some(IntegratedTailTable::new(law, top, 0.02)?)
            }
        };
        Ok(Self { law: law.clone(), config: *config, schedule, table })
    }

    fn exact_column(&self, r: f64, rng: &mut Rng) -> Result<(f64, f64)> {
        let mut s = 0.0;
        for _ in 0..100_000_000u64 {
            let x = self.law.sample(rng);
            if s + x > r {
                return Ok((r - s, s + x - r));
            }
            s += x;
        }
        Err(RcpError::Capacity(format!("more than 1e8 marks needed to pass R = {r:e}")))
    }

    fn asymptotic_column(&self, table: &IntegratedTailTable, r: f64, rng: &mut Rng) -> Result<(f64, f64)> {
        let age = table.inverse(open01(rng) * table.m(r)?)?.min(r);
        let x = self.law.sample_beyond(age, rng)?;
        Ok((age, x - age))
    }

    /// Age and overshoot at `r` of a renewal process started at 0.
    fn column(&self, r: f64, rng: &mut Rng) -> Result<(f64, f64)> {
        match (self.config.sampling, &self.table) {
            (ColumnSampling::Exact, _) | (_, None) => self.exact_column(r, rng),
            (ColumnSampling::Asymptotic, Some(table)) => self.asymptotic_column(table, r, rng),
            (ColumnSampling::Auto { exact_limit }, Some(table)) => {
                let m = if r.ln() < table.ln_t_max() { table.m(r)? } else { integrated_tail_m(&self.law, r)? };
                if r / m <= exact_limit {
                    self.exact_column(r, rng)
                } else {
                    self.asymptotic_column(table, r, rng)
                }
            }
        }
    }

    fn trial(&self, seed: u64) -> Result<TunnelOutcome> {
        let sched = &self.schedule;
        let r0 = sched.ln_r[0].exp();
        let mut rng0 = rng_for(seed, tag::COLUMN, &[0]);
        let first_gap = if self.config.condition_first_gap {
            self.law.sample_beyond(r0, &mut rng0)?
        } else {
            self.law.sample(&mut rng0)
        };
        let mut out = TunnelOutcome {
            success: false,
            failure: None,
            first_gap,
            levels: Vec::new(),
            columns_used: 1,
            ln_r: sched.ln_r.clone(),
            m: sched.m.clone(),
        };
        if first_gap <= r0 {
            out.failure = Some((0, FailureKind::FirstGap));
            return Ok(out);
        }
        let mut l_k: u64 = 0;
        for k in 0..self.config.depth {
            let r_k = sched.ln_r[k].exp();
            let small_r_k = sched.m[k].exp();
            let r_next = sched.m[k + 1].exp();
            let max_jump = sched.m[k].floor().max(1.0) as u64;
            let mut level = LevelDiagnostics {
                k,
                ln_r: sched.ln_r[k],
                m: sched.m[k],
                start_column: l_k,
                end_column: None,
                columns: Vec::new(),
                v: None,
                path_times: Vec::new(),
                failure: None,
            };
            for j in 1..=max_jump {
                out.columns_used += 1;
                if out.columns_used > self.config.column_budget {
                    return Err(RcpError::Capacity(format!(
                        "column budget of {} exhausted at level {k}",
                        self.config.column_budget
                    )));
                }
                let mut rng = rng_for(seed, tag::COLUMN, &[(l_k + j) as i64]);
                let (age, overshoot) = self.column(r_k, &mut rng)?;
                level.columns.push((age, overshoot));
                if overshoot > r_next {
                    level.end_column = Some(l_k + j);
                    break;
                }
            }
            let failure = self.check_level(&mut level, small_r_k, seed);
            level.failure = failure;
            let next = level.end_column;
            out.levels.push(level);
            if let Some(kind) = failure {
                out.failure = Some((k, kind));
                return Ok(out);
            }
            l_k = next.expect("a passing level has an end column");
        }
        out.success = true;
        Ok(out)
    }

    /// Fills in `V_k` and the path, returning the first failed condition.
    fn check_level(&self, level: &mut LevelDiagnostics, small_r_k: f64, seed: u64) -> Option<FailureKind> {
        level.end_column?;
        let v = level.columns.iter().map(|c| c.0).fold(small_r_k, f64::min);
        level.v = Some(v);
        if !(v > 0.0) || level.columns.iter().any(|c| c.0 < v) {
            return Some(FailureKind::CureInRectangle);
        }
        let jumps = level.columns.len();
        let mut rng = rng_for(seed, tag::PATH, &[level.k as i64]);
        let mut s = 0.0;
        for i in 0..jumps {
            s = if self.config.lambda.is_finite() {
                s + exponential(&mut rng, self.config.lambda)
            } else {
                v * (i + 1) as f64 / (jumps + 1) as f64
            };
            level.path_times.push(s);
        }
        (s > v).then_some(FailureKind::SlowPath)
    }
}

/// One trial on the seed stream `seed`.
pub fn tunnel_trial(law: &InterarrivalLaw, config: &TunnelConfig, seed: u64) -> Result<TunnelOutcome> {
    Tunnel::new(law, config)?.trial(seed)
}

/// Replays every level of a successful trial through [`config_at`].
///
/// Level `k` becomes a line of `L_{k+1} - L_k + 1` sites over the local
/// window from `R_k - V_k` to the start of the next level's rectangle (to
/// `R_K` for the last level). The known cure marks of the inspected columns
/// and the path's transmissions are laid down, and the infection started at
/// the left end must hold the right end at the close of the window.
pub fn cross_check_trial(outcome: &TunnelOutcome) -> Result<bool> {
    if !outcome.success {
        return domain("only successful trials can be cross-checked");
    }
    let depth = outcome.levels.len();
    for (k, level) in outcome.levels.iter().enumerate() {
        let v = level.v.expect("successful levels record V_k");
        let r_next = outcome.m[k + 1].exp();
        let handoff = if k + 1 < depth { outcome.levels[k + 1].v.expect("recorded") } else { 0.0 };
        // r_next and handoff can be equal and far larger than v.
        let w = v + (r_next - handoff);
        let jumps = level.columns.len() as i64;
        let bbox = SpaceTimeBox::new(vec![0], vec![jumps], 0.0, w)?;
        let cures: Vec<(Vec<i64>, Vec<f64>)> = level
            .columns
            .iter()
            .enumerate()
            .map(|(i, &(age, overshoot))| {
                let marks = [v - age, v + overshoot].into_iter().filter(|&m| m > 0.0 && m <= w).collect();
                (vec![i as i64 + 1], marks)
            })
            .collect();
        let trans: Vec<(Vec<i64>, Vec<i64>, Vec<f64>)> =
            level.path_times.iter().enumerate().map(|(i, &s)| (vec![i as i64], vec![i as i64 + 1], vec![s])).collect();
        let sample = GraphicalSample::from_marks(bbox.clone(), 1.0, &cures, &trans)?;
        let start = Configuration::from_sites(&bbox, &[vec![0]])?;
        let end = config_at(&sample, &start, 0.0, w)?;
        if !end.contains(jumps as usize) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelSummary {
    pub trials: u64,
    pub successes: u64,
    /// Success frequency, conditional on the first gap when configured so.
    pub estimate: EstimateResult,
    /// `ln P(first gap > R_0)`.
    pub ln_first_gap_tail: f64,
    /// `ln` of the unconditional success probability estimate.
    pub ln_unconditional: f64,
    pub failures_first_gap: u64,
    pub failures_columns: u64,
    pub failures_cure: u64,
    pub failures_path: u64,
    /// Successful trials whose replay through the evolution disagreed.
    pub cross_check_failures: u64,
    pub max_columns_used: usize,
}

/// Runs `trials` independent trials; trial `i` uses stream `(seed, i)`.
pub fn tunnel_trials(law: &InterarrivalLaw, config: &TunnelConfig, trials: usize, seed: u64) -> Result<TunnelSummary> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let tunnel = Tunnel::new(law, config)?;
    let outcomes: Vec<(TunnelOutcome, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let o = tunnel.trial(trial_seed(seed, i))?;
            let ok = if o.success { cross_check_trial(&o)? } else { true };
            Ok((o, ok))
        })
        .collect::<Result<_>>()?;
    let count =
        |kind: FailureKind| outcomes.iter().filter(|(o, _)| o.failure.map(|f| f.1) == Some(kind)).count() as u64;
    let successes = outcomes.iter().filter(|(o, _)| o.success).count() as u64;
    let estimate = EstimateResult::from_counts(successes, trials as u64);
    let ln_first_gap_tail = law.ln_tail(tunnel.schedule.ln_r[0].exp());
    let ln_unconditional =
        if config.condition_first_gap { estimate.estimate.ln() + ln_first_gap_tail } else { estimate.estimate.ln() };
    Ok(TunnelSummary {
        trials: trials as u64,
        successes,
        estimate,
        ln_first_gap_tail,
        ln_unconditional,
        failures_first_gap: count(FailureKind::FirstGap),
        failures_columns: count(FailureKind::TooManyColumns),
        failures_cure: count(FailureKind::CureInRectangle),
        failures_path: count(FailureKind::SlowPath),
        cross_check_failures: outcomes.iter().filter(|(_, ok)| !ok).count() as u64,
        max_columns_used: outcomes.iter().map(|(o, _)| o.columns_used).max().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_cures_reduces_to_first_gap() {
        // Marks only at multiples of e^40: every column has overshoot beyond
        // the whole schedule, so each level jumps one column.
        let law = InterarrivalLaw::deterministic(40f64.exp()).unwrap();
        let mut cfg = TunnelConfig::new(f64::INFINITY, 3.0, 0.5, 20);
        cfg.condition_first_gap = false;
        let s = tunnel_trials(&law, &cfg, 20, 1).unwrap();
        assert_eq!(s.successes, 20);
        assert_eq!(s.cross_check_failures, 0);
        // R_0 beyond the first mark: every trial fails on the first gap.
        let cfg = TunnelConfig { ln_r0: 41.0, depth: 12, ..cfg };
        let s = tunnel_trials(&law, &cfg, 10, 1).unwrap();
        assert_eq!(s.failures_first_gap, 10);
    }

    #[test]
    fn budget_is_enforced() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        let mut cfg = TunnelConfig::new(1.0, 30.0, 0.5, 50);
        cfg.column_budget = 3;
        let err = (0..20).map(|i| tunnel_trial(&law, &cfg, i)).find(|r| r.is_err());
        assert!(matches!(err, Some(Err(RcpError::Capacity(_)))));
    }

    #[test]
    fn successes_replay_through_the_evolution() {
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        let cfg = TunnelConfig::new(1.0, 40.0, 0.5, 30);
        let s = tunnel_trials(&law, &cfg, 200, 7).unwrap();
        assert!(s.successes > 0, "{s:?}");
        assert_eq!(s.cross_check_failures, 0);
        assert!(s.ln_first_gap_tail < 0.0);
    }

    #[test]
    fn asymptotic_sampling_needs_index_one() {
        let law = InterarrivalLaw::pareto_tail(0.5, 1.0).unwrap();
        let mut cfg = TunnelConfig::new(1.0, 5.0, 0.5, 10);
        cfg.sampling = ColumnSampling::Asymptotic;
        assert!(matches!(tunnel_trial(&law, &cfg, 0), Err(RcpError::Precondition(_))));
    }

    #[test]
    fn asymptotic_age_matches_exact_at_moderate_scale() {
        // At R = 1e5 both samplers are usable; compare the fraction of ages
        // above R/2 with a two-sample KS test on the ages.
        let law = InterarrivalLaw::example_log_sv(20.0).unwrap();
        let exact = Tunnel::new(
            &law,
            &TunnelConfig { sampling: ColumnSampling::Exact, ..TunnelConfig::new(1.0, 12.0, 0.5, 1) },
        )
        .unwrap();
        let asym = Tunnel::new(
            &law,
            &TunnelConfig { sampling: ColumnSampling::Asymptotic, ..TunnelConfig::new(1.0, 12.0, 0.5, 1) },
        )
        .unwrap();
        let r = 1e5;
        let draw = |t: &Tunnel, tag_: u64| -> Vec<f64> {
            (0..2000).map(|i| t.column(r, &mut rng_for(tag_, tag::COLUMN, &[i])).unwrap().0.ln()).collect()
        };
        let ks = crate::stats::ks_two_sample(&draw(&exact, 1), &draw(&asym, 2));
        // The limit law is approached slowly; only gross disagreement fails.
        assert!(ks.statistic < 0.15, "{ks:?}");
    }
}
