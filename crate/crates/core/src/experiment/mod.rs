//! Configuration files, parameter sweeps and cross-engine comparison.

mod compare;
mod config;
mod sweep;

pub use compare::{compare_engines, CompareLine, CompareReport, Tolerance, COMPARE_DISTANCE};
pub use config::{Config, Engine, SweepSection, SweptParam};
pub use sweep::{content_hash, gnuplot_script, run_sweep, to_csv, trend_checks, ResultRow, SweepOutput, TrendCheck, CI_Z, CSV_HEADER};
