//! Simulation and numerics for contact processes whose cures follow
//! renewal processes rather than Poisson clocks.
//!
//! The crate is organised bottom up:
//!
//! * [`renewal`]: interarrival laws, renewal tracks and diagnostics.
//! * [`graphical`]: seeded graphical construction on a space-time box.
//! * [`paths`]: the infection engine and crossing predicates.
//! * [`renorm`]: renormalization constants, recurrences and tunnel bounds.
//! * [`estimators`]: Monte Carlo estimators built on the above.
//! * [`dump`]: a versioned binary format for samples.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dump;
pub mod error;
pub mod estimators;
pub mod graphical;
pub mod oracle;
pub mod paths;
pub mod quadrature;
pub mod renewal;
pub mod renorm;
pub mod seed;
pub mod stats;

pub use error::{RcpError, Result};
pub use graphical::{build_sample, GraphicalSample, SeedSpec, SpaceTimeBox};
pub use paths::{evolve, Configuration, InfectionHistory};
pub use renewal::{InterarrivalLaw, RenewalTrack};
pub use stats::Interval;
