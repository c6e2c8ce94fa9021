//! One function per experiment kind. Each validates the fields it reads,
//! runs the computation and returns a CSV table plus a JSON summary. Nothing
//! touches the disk here.

use rcp_core::estimators::{
    erickson_check, estimate_conditional_determinism, estimate_crossing_probs, estimate_density_window,
    estimate_event_prob, estimate_survival, tunnel_trials, EstimateResult, MonteCarloConfig, TunnelConfig,
};
use rcp_core::renewal::{fit_moment_constant, gap_probability_estimate, moment_function_f, renewal_measure_estimate};
use rcp_core::renorm::{
    default_r0_grid, default_theta_geo, derive_constants, find_n0, find_r0, integrated_tail_ratio, lambda0_bound,
    run_recurrence, tunnel_bound_sum, tunnel_schedule, RecurrenceState, ScaleSchedule, StartRule,
};
use rcp_core::seed::{derive_seed, tag};
use serde_json::{json, Value};

use crate::config::{missing, Diagnostic, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::output::{cell, opt, Table};

/// What a run produces before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub result: Value,
}

const DEFAULT_TRIALS: usize = 1000;

/// Default `t`-grid of the moment fit.
pub const FIT_TIMES: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

/// Default `u`-grid of the moment fit: `e^1, ..., e^8`.
pub fn fit_us() -> Vec<f64> {
    (1..=8).map(|i| (i as f64).exp()).collect()
}

pub fn compute(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    match config.kind {
        ExperimentKind::SurvivalCurve => survival_curve(config, seed),
        ExperimentKind::Crossing => crossing(config, seed),
        ExperimentKind::Recurrence => recurrence(config, seed),
        ExperimentKind::Lambda0 => lambda0(config, seed),
        ExperimentKind::TunnelBound => tunnel_bound(config),
        ExperimentKind::TunnelTrial => tunnel_trial(config, seed),
        ExperimentKind::Determinism => determinism(config, seed),
        ExperimentKind::Density => density(config, seed),
        ExperimentKind::RenewalDiagnostics => renewal_diagnostics(config, seed),
        ExperimentKind::EventProb => event_prob(config, seed),
    }
}

fn estimate_cells(r: &EstimateResult) -> Vec<String> {
    vec![cell(r.estimate), cell(r.ci.lo), cell(r.ci.hi)]
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn mc_config(
    config: &ExperimentConfig,
    seed: u64,
    default_radius: i64,
    default_horizon: f64,
) -> CliResult<MonteCarloConfig> {
    let law = config.law()?.clone();
    let horizon = config.horizon.unwrap_or(default_horizon);
    if !(horizon >= 1.0 && horizon.is_finite()) {
        return Err(CliError::config("horizon", format!("must be finite and >= 1, got {horizon}")));
    }
    Ok(MonteCarloConfig::new(law, config.dimension()?, config.trials(DEFAULT_TRIALS)?, seed)
        .with_horizon(horizon)
        .with_radius(config.radius(default_radius)?))
}

fn survival_curve(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let mc = mc_config(config, seed, 50, 100.0)?;
    let lambdas = config.lambda_grid()?;
    let estimates = estimate_survival(&mc, &lambdas)?;
    let mut table = Table::new(&["lambda", "estimate", "ci_lo", "ci_hi", "boundary_hits", "trials"]);
    for e in &estimates {
        let mut row = vec![cell(e.lambda)];
        row.extend(estimate_cells(&e.result));
        row.extend([cell(e.result.boundary_hits), cell(e.result.trials)]);
        table.push(row);
    }
    Ok(Outcome { table, result: to_value(&estimates) })
}

fn crossing(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let mc = mc_config(config, seed, 0, 1.0)?;
    let theta = config.positive("theta", config.theta)?;
    let lambda = config.lambda()?;
    let mut table = Table::new(&[
        "n",
        "ln_b_n",
        "t",
        "t_ci_lo",
        "t_ci_hi",
        "t_half",
        "t_half_ci_lo",
        "t_half_ci_hi",
        "s",
        "s_ci_lo",
        "s_ci_hi",
        "h",
        "h_ci_lo",
        "h_ci_hi",
        "containment_violations",
        "trials",
    ]);
    let mut all = Vec::new();
    for n in config.scales()? {
        let e = estimate_crossing_probs(n, theta, lambda, &mc)?;
        let mut row = vec![cell(e.n), cell(e.ln_b_n)];
        for r in [&e.t, &e.t_half, &e.s, &e.h] {
            row.extend(estimate_cells(r));
        }
        row.extend([cell(e.containment_violations), cell(e.t.trials)]);
        table.push(row);
        all.push(e);
    }
    Ok(Outcome { table, result: to_value(&all) })
}

/// The moment constant from the config, or fitted from the law's gap probabilities.
fn moment_constant(config: &ExperimentConfig, theta: f64, seed: u64) -> CliResult<(f64, Value)> {
    if let Some(c) = config.c_moment {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(CliError::config("c_moment", format!("must be finite and >= 0, got {c}")));
        }
        return Ok((c, json!({ "source": "config", "c_moment": c })));
    }
    let law = config.law().map_err(|_| CliError::config("c_moment", "give `c_moment` or a `law` to fit it from"))?;
    let ts = config.times.clone().unwrap_or_else(|| FIT_TIMES.to_vec());
    let us = config.us.clone().unwrap_or_else(fit_us);
    let fit = fit_moment_constant(law, theta, config.start.unwrap_or(0.0), &ts, &us, config.trials(10_000)?, seed)?;
    Ok((fit.c_moment, json!({ "source": "fit", "fit": to_value(&fit) })))
}

fn recurrence(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let d = config.dimension()?;
    let theta = config.positive("theta", config.theta)?;
    let rule = config.rule.unwrap_or(StartRule::AsStated);
    let (c_moment, fit) = moment_constant(config, theta, seed)?;
    let audit = run_recurrence(d, theta, c_moment, config.steps.unwrap_or(50), rule)?;
    let mut table =
        Table::new(&["n", "ln_u", "ln_target", "pass", "ln_square_term", "ln_moment_term", "quarter_bounds_hold"]);
    for s in &audit.steps {
        table.push(vec![
            cell(s.n),
            cell(s.ln_u),
            cell(s.ln_target),
            cell(s.pass),
            cell(s.ln_square_term),
            cell(s.ln_moment_term),
            cell(s.quarter_bounds_hold),
        ]);
    }
    let lambda0 =
        if audit.certified { Some(lambda0_bound(&ScaleSchedule::new(audit.constants), audit.n0)?) } else { None };
    let result = json!({
        "c_moment": c_moment,
        "moment_fit": fit,
        "audit": {
            "constants": to_value(&audit.constants),
            "rule": to_value(&audit.rule),
            "n_min": audit.n_min,
            "n0": audit.n0,
            "square_exponent_exact": audit.square_exponent_exact,
            "first_failure": audit.first_failure,
            "certified": audit.certified,
        },
        "lambda0": to_value(&lambda0),
    });
    Ok(Outcome { table, result })
}

fn lambda0(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let d = config.dimension()?;
    let theta = config.positive("theta", config.theta)?;
    let rule = config.rule.unwrap_or(StartRule::AsStated);
    let (c_moment, fit) = moment_constant(config, theta, seed)?;
    let schedule = ScaleSchedule::new(derive_constants(d, theta)?);
    let state = RecurrenceState::new(d, c_moment)?;
    let n0 = match config.n {
        Some(n) => n,
        None => find_n0(&schedule, &state, rule, 1_000_000)?,
    };
    let l = lambda0_bound(&schedule, n0)?;
    let mut table = Table::new(&["n0", "ln_b_n0", "ln_edges", "ln_lambda0", "lambda0"]);
    table.push(vec![cell(l.n0), cell(l.ln_b_n0), cell(l.ln_edges), cell(l.ln_lambda0), l.lambda0.clone()]);
    let result = json!({
        "n0": l.n0,
        "b_n0": rcp_core::renorm::format_ln(l.ln_b_n0),
        "ln_b_n0": l.ln_b_n0,
        "N": rcp_core::renorm::format_ln(l.ln_edges),
        "ln_N": l.ln_edges,
        "lambda0": l.lambda0,
        "ln_lambda0": l.ln_lambda0,
        "c_moment": c_moment,
        "moment_fit": fit,
        "rule": to_value(&rule),
    });
    Ok(Outcome { table, result })
}

fn alpha_scale(config: &ExperimentConfig) -> CliResult<f64> {
    match config.alpha_scale.unwrap_or(0.5) {
        a if a > 0.0 && a < 1.0 => Ok(a),
        a => Err(CliError::config("alpha_scale", format!("must lie in (0, 1), got {a}"))),
    }
}

fn tunnel_bound(config: &ExperimentConfig) -> CliResult<Outcome> {
    let lambdas = config.lambda_grid()?;
    let a = alpha_scale(config)?;
    let depth = config.depth.unwrap_or(200);
    let theta_geo = config.theta_geo.unwrap_or_else(|| default_theta_geo(a));
    let eps = config.positive("eps", Some(config.eps.unwrap_or(1.0)))?;
    if let Some(ln_r0) = config.ln_r0 {
        let schedule = tunnel_schedule(ln_r0, a, depth)?;
        let mut table = Table::new(&[
            "lambda",
            "k",
            "ln_r",
            "m",
            "ln_geometric",
            "ln_short_age",
            "ln_slow_path",
            "ln_recent_cure",
            "ln_total",
        ]);
        let mut sums = Vec::new();
        for &lambda in &lambdas {
            let b = tunnel_bound_sum(&schedule, lambda, theta_geo)?;
            for t in &b.terms {
                table.push(vec![
                    cell(lambda),
                    cell(t.k),
                    cell(t.ln_r),
                    cell(t.m),
                    cell(t.ln_geometric),
                    cell(t.ln_short_age),
                    cell(t.ln_slow_path),
                    cell(t.ln_recent_cure),
                    cell(t.ln_total),
                ]);
            }
            sums.push(json!({ "lambda": lambda, "partial_sum": b.partial_sum, "tail": b.tail, "sum": b.sum }));
        }
        return Ok(Outcome { table, result: json!({ "ln_r0": ln_r0, "theta_geo": theta_geo, "sums": sums }) });
    }
    let grid = default_r0_grid();
    let mut table = Table::new(&["lambda", "ln_r0", "sum"]);
    let mut found = Vec::new();
    for &lambda in &lambdas {
        let r = find_r0(lambda, eps, a, theta_geo, depth, &grid)?;
        table.push(vec![cell(r.lambda), cell(r.ln_r0), cell(r.sum)]);
        found.push(r);
    }
    Ok(Outcome { table, result: json!({ "theta_geo": theta_geo, "eps": eps, "r0": to_value(&found) }) })
}

fn tunnel_trial(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let law = config.law()?;
    let lambdas = config.lambda_grid()?;
    let a = alpha_scale(config)?;
    let depth = config.depth.unwrap_or(200);
    let trials = config.trials(DEFAULT_TRIALS)?;
    let theta_geo = config.theta_geo.unwrap_or_else(|| default_theta_geo(a));
    let eps = config.positive("eps", Some(config.eps.unwrap_or(1.0)))?;
    let mut table = Table::new(&[
        "lambda",
        "ln_r0",
        "trials",
        "successes",
        "estimate",
        "ci_lo",
        "ci_hi",
        "ln_first_gap_tail",
        "ln_unconditional",
        "failures_first_gap",
        "failures_columns",
        "failures_cure",
        "failures_path",
        "cross_check_failures",
        "max_columns_used",
    ]);
    let mut all = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let ln_r0 = match config.ln_r0 {
            Some(l) => l,
            None => find_r0(lambda, eps, a, theta_geo, depth, &default_r0_grid())?.ln_r0,
        };
        let mut tc = TunnelConfig::new(lambda, ln_r0, a, depth);
        if let Some(s) = config.sampling {
            tc.sampling = s;
        }
        if let Some(c) = config.condition_first_gap {
            tc.condition_first_gap = c;
        }
        if let Some(b) = config.column_budget {
            tc.column_budget = b;
        }
        let s = tunnel_trials(law, &tc, trials, derive_seed(seed, tag::TRIAL, &[i as i64]))?;
        let mut row = vec![cell(lambda), cell(ln_r0), cell(s.trials), cell(s.successes)];
        row.extend(estimate_cells(&s.estimate));
        row.extend([
            cell(s.ln_first_gap_tail),
            cell(s.ln_unconditional),
            cell(s.failures_first_gap),
            cell(s.failures_columns),
            cell(s.failures_cure),
            cell(s.failures_path),
            cell(s.cross_check_failures),
            cell(s.max_columns_used),
        ]);
        table.push(row);
        all.push(json!({ "config": to_value(&tc), "summary": to_value(&s) }));
    }
    Ok(Outcome { table, result: Value::Array(all) })
}

fn determinism(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let law = config.law()?;
    let lambda = config.lambda()?;
    let t = config.positive("t", config.t)?;
    let report = estimate_conditional_determinism(
        law,
        lambda,
        config.dimension()?,
        t,
        config.radius(20)?,
        config.fields.unwrap_or(100),
        config.replicates.unwrap_or(200),
        config.k.unwrap_or(0),
        seed,
    )?;
    let mut table = Table::new(&["field", "age", "alive", "p_healthy", "target", "gap", "signed_gap"]);
    for f in &report.fields {
        table.push(vec![
            cell(f.field),
            cell(f.age),
            cell(f.alive),
            opt(f.p_healthy),
            cell(f.target),
            opt(f.gap),
            opt(f.signed_gap),
        ]);
    }
    let result = json!({
        "mean_gap": report.mean_gap,
        "mean_signed_gap": report.mean_signed_gap,
        "undefined_fields": report.undefined_fields,
    });
    Ok(Outcome { table, result })
}

fn density(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let mc = mc_config(config, seed, 50, 1.0)?;
    let lambda = config.lambda()?;
    let window = config.window.ok_or_else(|| missing("window"))?;
    let initial = config.initial.unwrap_or_default();
    let mut table = Table::new(&[
        "t",
        "conditional",
        "conditional_ci_lo",
        "conditional_ci_hi",
        "alive",
        "dead",
        "alive_and_full",
        "trials",
    ]);
    let mut all = Vec::new();
    for t in config.time_grid()? {
        let e = estimate_density_window(&mc, lambda, window, t, initial)?;
        let cond = e.conditional.map(|c| estimate_cells(&c)).unwrap_or_else(|| vec![String::new(); 3]);
        let mut row = vec![cell(t)];
        row.extend(cond);
        row.extend([cell(e.alive), cell(e.dead.estimate), cell(e.alive_and_full.estimate), cell(e.dead.trials)]);
        table.push(row);
        all.push(json!({ "t": t, "estimate": to_value(&e) }));
    }
    Ok(Outcome { table, result: Value::Array(all) })
}

fn renewal_diagnostics(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let law = config.law()?;
    match config.diagnostic.unwrap_or_default() {
        Diagnostic::Gap => {
            let ts = config.times.clone().unwrap_or_else(|| FIT_TIMES.to_vec());
            let us = config.us.clone().unwrap_or_else(fit_us);
            let theta = config.theta;
            let trials = config.trials(10_000)?;
            let start = config.start.unwrap_or(0.0);
            let mut table = Table::new(&["t", "u", "estimate", "ci_lo", "ci_hi", "f_u", "scaled"]);
            let mut max_scaled: Option<f64> = None;
            for (j, &u) in us.iter().enumerate() {
                for (i, &t) in ts.iter().enumerate() {
                    let s = derive_seed(seed, tag::TRIAL, &[i as i64, j as i64]);
                    let g = gap_probability_estimate(law, start, t, u, trials, s)?;
                    let f = theta.map(|th| moment_function_f(u, th));
                    let scaled = f.map(|f| f * g.estimate);
                    if let Some(x) = scaled {
                        max_scaled = Some(max_scaled.map_or(x, |m: f64| m.max(x)));
                    }
                    table.push(vec![cell(t), cell(u), cell(g.estimate), cell(g.lo), cell(g.hi), opt(f), opt(scaled)]);
                }
            }
            Ok(Outcome { table, result: json!({ "theta": theta, "max_scaled": max_scaled }) })
        }
        Diagnostic::RenewalMeasure => {
            let xs = config.xs.clone().ok_or_else(|| missing("xs"))?;
            let h = config.positive("h", config.h)?;
            let trials = config.trials(10_000)?;
            let mut table = Table::new(&["x", "h", "estimate", "ci_lo", "ci_hi"]);
            for (i, &x) in xs.iter().enumerate() {
                let e = renewal_measure_estimate(law, x, h, trials, derive_seed(seed, tag::TRIAL, &[i as i64]))?;
                table.push(vec![cell(x), cell(h), cell(e.estimate), cell(e.lo), cell(e.hi)]);
            }
            let mean = law.mean();
            Ok(Outcome { table, result: json!({ "h_over_mean": mean.map(|m| h / m) }) })
        }
        Diagnostic::Erickson => {
            let t = config.positive("t", config.t)?;
            let thetas = config.thetas.clone().ok_or_else(|| missing("thetas"))?;
            let trials = config.trials(10_000)?;
            let mut table = Table::new(&[
                "theta",
                "t",
                "threshold",
                "estimate",
                "ci_lo",
                "ci_hi",
                "target",
                "abs_diff",
                "censored",
            ]);
            let mut all = Vec::new();
            for (i, &theta) in thetas.iter().enumerate() {
                let r = erickson_check(law, t, theta, trials, derive_seed(seed, tag::TRIAL, &[i as i64]))?;
                let mut row = vec![cell(theta), cell(t), cell(r.threshold)];
                row.extend(estimate_cells(&r.estimate));
                row.extend([cell(r.target), cell(r.abs_diff), cell(r.censored)]);
                table.push(row);
                all.push(r);
            }
            Ok(Outcome { table, result: to_value(&all) })
        }
        Diagnostic::TailRatio => {
            let ts = config.time_grid()?;
            let exps = config.exponents.clone().ok_or_else(|| missing("exponents"))?;
            let mut table = Table::new(&["t", "a", "ratio", "target", "relative_error"]);
            for &t in &ts {
                for &a in &exps {
                    let r = integrated_tail_ratio(law, t, a)?;
                    let target = (-a).exp();
                    table.push(vec![cell(t), cell(a), cell(r), cell(target), cell((r - target).abs() / target)]);
                }
            }
            Ok(Outcome { table, result: Value::Null })
        }
    }
}

fn event_prob(config: &ExperimentConfig, seed: u64) -> CliResult<Outcome> {
    let law = config.law()?;
    let d = config.dimension()?;
    let trials = config.trials(DEFAULT_TRIALS)?;
    let mut table = Table::new(&["event", "n", "estimate", "ci_lo", "ci_hi", "bound", "within_bound", "trials"]);
    let mut all = Vec::new();
    for (i, spec) in config.events()?.iter().enumerate() {
        let e = estimate_event_prob(spec, law, d, trials, derive_seed(seed, tag::TRIAL, &[i as i64]))?;
        let mut row = vec![spec.name().to_string(), cell(e.n)];
        row.extend(estimate_cells(&e.estimate));
        row.extend([opt(e.bound), opt(e.within_bound), cell(e.estimate.trials)]);
        table.push(row);
        all.push(json!({ "spec": to_value(spec), "estimate": to_value(&e) }));
    }
    Ok(Outcome { table, result: Value::Array(all) })
}
