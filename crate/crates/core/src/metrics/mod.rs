//! Analytic interference, rate, power, energy-efficiency and coverage metrics.

pub mod analytic;
pub mod kernel;
pub mod scenario;

pub use analytic::{
    avg_cell_rate, avg_interference, avg_tx_power, bs_power, coverage_efficiency, coverage_efficiency_traffic,
    energy_efficiency, expected_log_rate, rate_lower_bound, sinr_of_distance, AnalyticModel, GeometryProfile,
    Inversion, RateCurve,
};
pub use kernel::{palm_integral, poisson_palm_closed_form, Kernel, SecondMoment};
pub use scenario::{OmegaBar, RandomReading, Regularization, Scenario, Strategy, TrafficMode};
