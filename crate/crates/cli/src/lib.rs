//! Configuration, CSV files and subcommands of the `platform-ident` command-line tool.
//!
//! Each subcommand is a plain function here so that tests and other programs can drive
//! the same code paths as the binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod files;
pub mod run;

pub use config::{emit, load_config, parse_config, ConfigError, KSweep, ScenarioConfig};
pub use run::{
    identify_observed, load_intercepted, run_demo, run_identify, run_sensitivity, run_synth,
    sensitivity_observed, CliError, DemoReport, IdentifyReport, RunOptions, SynthReport, BUNDLED,
};
