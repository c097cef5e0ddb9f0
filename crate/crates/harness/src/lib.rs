//! Command-line experiment runner for the `ckis-core` estimators.
//!
//! A run streams `n` particles through a compressed estimator, optionally
//! paired with an uncompressed one fed the same draws, and writes one CSV row
//! per step plus a `key=value` manifest. A sweep repeats runs over a
//! parameter grid and seeds `seed_base + r` and writes per-point summaries.

pub mod config;
mod error;
pub mod run;
pub mod sweep;

pub use config::{ExperimentKind, Problem, RunConfig, Settings};
pub use error::{HarnessError, Result};
pub use run::{execute, run, RunOutcome, TraceRow, CSV_HEADER};
pub use sweep::{sweep, PointSummary, SweepPlan};
