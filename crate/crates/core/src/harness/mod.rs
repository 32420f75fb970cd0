//! Experiment orchestration: configs, grid tuning, method suites, rate fits
//! and the EXTRA baseline.

mod config;
mod extra;
mod fit;
mod suite;
mod tune;
pub mod verify;

pub use config::{Algorithm, ExperimentConfig, MethodSpec, SetupSpec, StepChoice, TuningConfig};
pub use extra::run_extra;
pub use fit::{fit_rate, fit_series, RateFit, MIN_FIT_POINTS};
pub use suite::{run_method, run_suite, write_outputs, MethodResult, MethodStatus, SuiteReport, SummaryRow};
pub use tune::{tune, tune_extra, TuneResult};
