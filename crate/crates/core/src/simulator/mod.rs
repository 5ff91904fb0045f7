//! Monte Carlo engine.
//!
//! Every realization samples the base stations on the sampling square of a
//! [`Window`](crate::geometry::Window), applies the strategy's thinning and
//! evaluates users against the active set. Interferer sums are truncated at
//! the guard distance and completed with the constant-kernel tail. Shadowing
//! on interfering links enters through its moments (the conditional mean
//! given the geometry), which keeps the estimators usable when `E[omega^2]`
//! is astronomically large.

mod estimate;
mod finite_m;
mod palm;
mod realization;

pub use estimate::{
    empirical_nearest_pdf, estimate_ce, estimate_ee, CeThreshold, EeEstimate, Histogram, McConfig, McEstimate,
    SinrMode,
};
pub use finite_m::{finite_m_validation, FiniteMConfig, FiniteMRow};
pub use palm::{estimate_at_distance, sample_at_distance, DistanceEstimate, PalmSample};
pub use realization::{active_stations, run_realization, typical_user, RealizationStats, UeRecord};
