//! Experiment configuration files.
//!
//! A config is one flat JSON object. `kind` picks the experiment; the other
//! keys are shared across kinds and each kind reads the ones it needs.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use rcp_core::estimators::{ColumnSampling, EventSpec, InitialCondition};
use rcp_core::renorm::StartRule;
use rcp_core::InterarrivalLaw;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "RCP_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SurvivalCurve,
    Crossing,
    Recurrence,
    Lambda0,
    TunnelBound,
    TunnelTrial,
    Determinism,
    Density,
    RenewalDiagnostics,
    EventProb,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SurvivalCurve => "survival-curve",
            Self::Crossing => "crossing",
            Self::Recurrence => "recurrence",
            Self::Lambda0 => "lambda0",
            Self::TunnelBound => "tunnel-bound",
            Self::TunnelTrial => "tunnel-trial",
            Self::Determinism => "determinism",
            Self::Density => "density",
            Self::RenewalDiagnostics => "renewal-diagnostics",
            Self::EventProb => "event-prob",
        }
    }
}

/// What a `renewal-diagnostics` run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    /// Gap probabilities over `times x us`, scaled by the moment function.
    #[default]
    Gap,
    /// Mean renewal counts in `(x, x + h]` for each `x` in `xs`.
    RenewalMeasure,
    /// Overshoot beyond `m^{-1}(theta m(t))` for each theta in `thetas`.
    Erickson,
    /// `m(t / (ln t)^a) / m(t)` over `times x exponents`.
    TailRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<InterarrivalLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    /// Signed so that a negative count is reported against this field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    /// Renewal start offset for gap probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub us: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_moment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<StartRule>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Target for the tunnel bound sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_geo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<ColumnSampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_first_gap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_budget: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventSpec>>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(json_field(&e), e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn law(&self) -> CliResult<&InterarrivalLaw> {
        let law = self.law.as_ref().ok_or_else(|| missing("law"))?;
        law.validate().map_err(|e| CliError::config("law", e.to_string()))?;
        Ok(law)
    }

    pub fn trials(&self, default: usize) -> CliResult<usize> {
        match self.trials {
            None => Ok(default),
            Some(n) if n >= 1 => Ok(n as usize),
            Some(n) => Err(CliError::config("trials", format!("must be at least 1, got {n}"))),
        }
    }

    pub fn dimension(&self) -> CliResult<usize> {
        if self.d == 0 {
            return Err(CliError::config("d", "dimension must be at least 1"));
        }
        Ok(self.d)
    }

    /// `lambdas` if present, else `[lambda]`.
    pub fn lambda_grid(&self) -> CliResult<Vec<f64>> {
        let grid = grid(&self.lambdas, self.lambda, "lambdas")?;
        if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(CliError::config("lambdas", format!("rates must be finite and >= 0, got {bad}")));
        }
        Ok(grid)
    }

    pub fn lambda(&self) -> CliResult<f64> {
        match self.lambda {
            Some(l) if l.is_finite() && l >= 0.0 => Ok(l),
            Some(l) => Err(CliError::config("lambda", format!("must be finite and >= 0, got {l}"))),
            None => Err(missing("lambda")),
        }
    }

    pub fn time_grid(&self) -> CliResult<Vec<f64>> {
        grid(&self.times, self.t, "times")
    }

    pub fn scales(&self) -> CliResult<Vec<u32>> {
        grid(&self.ns, self.n, "ns")
    }

    pub fn events(&self) -> CliResult<Vec<EventSpec>> {
        grid(&self.events, self.event.clone(), "events")
    }

    pub fn positive(&self, field: &str, value: Option<f64>) -> CliResult<f64> {
        match value {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(CliError::config(field, format!("must be a positive finite number, got {v}"))),
            None => Err(missing(field)),
        }
    }

    pub fn radius(&self, default: i64) -> CliResult<i64> {
        match self.radius.unwrap_or(default) {
            r if r >= 0 => Ok(r),
            r => Err(CliError::config("radius", format!("must be >= 0, got {r}"))),
        }
    }
}

fn grid<T: Clone>(list: &Option<Vec<T>>, single: Option<T>, field: &str) -> CliResult<Vec<T>> {
    let singular = field.trim_end_matches('s');
    match (list, single) {
        (Some(_), Some(_)) => Err(CliError::config(field, format!("give either `{field}` or `{singular}`, not both"))),
        (Some(v), None) if v.is_empty() => Err(CliError::config(field, "must not be empty")),
        (Some(v), None) => Ok(v.clone()),
        (None, Some(x)) => Ok(vec![x]),
        (None, None) => Err(CliError::config(field, format!("one of `{field}` or `{singular}` is required"))),
    }
}

pub(crate) fn missing(field: &str) -> CliError {
    CliError::config(field, "required for this experiment kind")
}

/// Best-effort field name from a serde error.
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    format!("line {} column {}", e.line(), e.column())
}

/// Seed precedence: flag, then the environment, then the file, then 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(v) = env {
        return v.trim().parse().map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: {v:?}")));
    }
    Ok(file.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_name_the_field() {
        let err = ExperimentConfig::from_json(r#"{"kind":"crossing","lambda":1,"colour":3}"#).unwrap_err();
        match err {
            CliError::Config { field, .. } => assert_eq!(field, "colour"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_trials_are_a_config_error() {
        let c = ExperimentConfig::from_json(r#"{"kind":"survival-curve","trials":-5}"#).unwrap();
        let err = c.trials(10).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("trials"));
    }

    #[test]
    fn single_values_and_lists_are_exclusive() {
        let c = ExperimentConfig::from_json(r#"{"kind":"survival-curve","lambda":1,"lambdas":[1,2]}"#).unwrap();
        assert!(c.lambda_grid().is_err());
        let c = ExperimentConfig::from_json(r#"{"kind":"survival-curve","lambda":1}"#).unwrap();
        assert_eq!(c.lambda_grid().unwrap(), vec![1.0]);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some("2"), Some(3)).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some("2"), Some(3)).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some(3)).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("x"), Some(3)).is_err());
    }
}
