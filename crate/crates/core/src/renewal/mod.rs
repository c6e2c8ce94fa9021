//! Interarrival laws, renewal tracks and renewal-theoretic diagnostics.

mod coupling;
mod diagnostics;
mod law;
mod tail;
mod track;

pub use coupling::{check_hazard_dominance, hazard_coupled_tracks};
pub use diagnostics::{
    fit_moment_constant, gap_probability_estimate, is_epsilon_block, ln_moment_function_f, moment_function_f,
    negligibility_integral, renewal_measure_estimate, theta_min, GapPoint, MomentFit, Negligibility,
};
pub use law::InterarrivalLaw;
pub use tail::{
    integrated_tail_m, integrated_tail_m_with, integrated_tail_sup, inverse_integrated_tail,
    inverse_integrated_tail_with, IntegratedTailTable, NumericsConfig,
};
pub use track::{generate_track, generate_track_capped, AgeOvershoot, RenewalTrack};

/// Draws one interarrival from `law`.
pub fn sample_interarrival<R: rand::RngCore + ?Sized>(law: &InterarrivalLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}
