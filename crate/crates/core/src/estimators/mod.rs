//! Monte Carlo estimators built on the graphical construction.
//!
//! Trial `i` of every estimator draws only from streams derived from
//! `(seed, i)`, and results are merged in trial order, so output does not
//! depend on how many threads run the trials.

mod crossing;
mod density;
mod determinism;
mod erickson;
mod events;
mod survival;
mod tunnel;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::renewal::InterarrivalLaw;
use crate::seed::{derive_seed, tag};
use crate::stats::{wilson, Interval, Z95};

pub use crossing::{estimate_crossing_probs, CrossingEstimates};
pub use density::{estimate_density_window, DensityEstimate, InitialCondition};
pub use determinism::{
    conditional_healthy_fraction, estimate_conditional_determinism, DeterminismReport, FieldGap, HealthyFraction,
};
pub use erickson::{erickson_check, EricksonResult};
pub use events::{cn_bound, estimate_event_prob, fit_cn_constants, EventEstimate, EventSpec};
pub use survival::{estimate_survival, survival_runs, SurvivalEstimate};
pub use tunnel::{
    cross_check_trial, tunnel_trial, tunnel_trials, ColumnSampling, FailureKind, LevelDiagnostics, TunnelConfig,
    TunnelOutcome, TunnelSummary,
};

/// Shared Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    pub horizon: f64,
    /// Sites range over `[-radius, radius]^d`.
    pub radius: i64,
    pub d: usize,
    pub law: InterarrivalLaw,
    /// Mark budget per sample.
    pub max_marks: usize,
}

impl MonteCarloConfig {
    pub fn new(law: InterarrivalLaw, d: usize, trials: usize, seed: u64) -> Self {
        Self { trials, seed, horizon: 1.0, radius: 0, d, law, max_marks: 50_000_000 }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_radius(mut self, radius: i64) -> Self {
        self.radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.d == 0 {
            return domain("dimension must be at least 1");
        }
        if !(self.horizon >= 1.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be a finite number >= 1, got {}", self.horizon));
        }
        if self.radius < 0 {
            return domain(format!("lattice radius must be >= 0, got {}", self.radius));
        }
        self.law.validate()
    }

    pub(crate) fn trial_seed(&self, trial: usize) -> u64 {
        trial_seed(self.seed, trial)
    }
}

pub(crate) fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, tag::TRIAL, &[trial as i64])
}

/// A probability estimate with its Wilson 95% interval and censoring counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub ci: Interval,
    pub successes: u64,
    pub trials: u64,
    /// Trials whose infection reached the spatial boundary.
    pub boundary_hits: u64,
    /// Trials still running at the horizon.
    pub horizon_hits: u64,
}

impl EstimateResult {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let ci = wilson(successes, trials, Z95);
        Self { estimate: ci.estimate, ci, successes, trials, boundary_hits: 0, horizon_hits: 0 }
    }

    pub fn half_width(&self) -> f64 {
        self.ci.half_width()
    }
}
