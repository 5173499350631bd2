//! Scenario runner for the `deformq` workbench: parses scenario files, runs
//! named verification suites and renders deterministic reports.

pub mod checks;
pub mod report;
pub mod scenario;

pub use checks::run_checks;
pub use report::{CheckResult, Report, Status};
pub use scenario::{parse_model_file, parse_scenario, Check, Scenario, ScenarioError};
