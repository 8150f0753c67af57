//! Experiment harness: seeded Monte Carlo sweeps, iteration traces,
//! complexity benchmarks and oracle self-validation.
//!
//! Every trial draws its own RNG from `(seed, trial_index, P)` (see
//! [`trial::trial_seed`]), so results do not depend on the number of
//! workers. All detectors of a trial see the same symbols, channel, noise
//! and quantized samples.

pub mod bench;
pub mod config;
pub mod sweep;
pub mod trial;
pub mod validate;

pub use bench::{bench, loglog_slope, run_bench, BenchMode, BenchReport, BenchRow};
pub use config::{Algorithm, ExperimentConfig, SweepAxis, KEYS};
pub use sweep::{aggregate, iteration_trace, run_all_trials, run_iteration_trace, run_sweep, summary_table, SweepRow, TraceRow};
pub use trial::{compute_ber, compute_nmse, compute_ser, draw_instance, run_trial, trial_seed, TrialInstance, TrialRecord};
pub use validate::{run_validate, ValidationReport};
