//! Seeded experiment grids over design, signal and sample size, with CSV
//! and JSON writers; the `logit-lab` binary drives them.

pub mod config;
pub mod error;
pub mod grid;
pub mod output;

pub use config::{Direction, ExperimentConfig, LawFamily, SampleSizes};
pub use error::{HarnessError, Result};
pub use grid::{existence_crossing, run_existence_grid, run_misspec_grid, run_risk_grid, CellSummary, Crossing, MisspecComparison};
