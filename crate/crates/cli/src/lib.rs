//! Scenario files, builtin examples and report output for the `maxima-bc`
//! command line tool.

pub mod builtins;
pub mod config;
pub mod expr;
pub mod run;

pub use builtins::{builtin, list_builtins, Builtin};
pub use config::{Checker, ConfigError, Format, ScenarioConfig};
pub use run::{run_scenario, write_outputs, CliError, Overrides, Report};
