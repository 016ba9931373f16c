//! Experiment harness: scenario configs, sweeps, CSV output, exponent fits
//! and the acceptance suite behind `verify`.

pub mod analysis;
pub mod run;
pub mod scenario;
pub mod verify;

pub use analysis::{exact_valley_first, fit_exponent, fit_means, valley_first_test, ExponentFit, Field, ValleyFirstReport};
pub use run::{csv_bytes, read_csv, run_all, run_cell, run_scenario, write_csv, ResultRow, SCHEMA_VERSION};
pub use scenario::{cell_seed, parse_config, Algorithm, CapRule, Cell, Rule, Scenario};
pub use verify::{run_criterion, verify_all, CriterionResult, Report, Thresholds, CRITERIA, TOPOLOGY_CONFIG};
