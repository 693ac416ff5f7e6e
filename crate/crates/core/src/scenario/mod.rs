//! Scenario configs: systems, certificate requests and checks, run end to end.

mod builtins;
pub mod config;
pub mod registry;
mod report;
mod run;

pub use builtins::{builtin, builtin_names, coverage, resolve_builtin, Coverage, BUILTINS};
pub use config::{parse_config, Check, Scenario, System, SCHEMA_VERSION};
pub use registry::{certify_pairs, certify_theorem, theorem_info, Certified, Params, TheoremInfo, SECOND_ORDER_PARAMS, THEOREMS};
pub use report::{load_reports, render, write_outcomes, Format, ScenarioReports};
pub use run::{run_all, run_scenario, CertEntry, ScenarioOutcome};
