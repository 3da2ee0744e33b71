//! Deterministic Monte Carlo harness for coverage studies.

mod coverage;
mod dgp;
mod table;
mod truth;

pub use coverage::{run_replication, run_scenario, CoverageReport, LevelSummary, RepOutcome, Summary};
pub use dgp::{generate, replication_rng, Case, Mechanism, Scenario, TRUNCATION_CAP};
pub use table::{emit_table, parse_csv_table, TableFormat, TableRow};
pub use truth::Truth;
