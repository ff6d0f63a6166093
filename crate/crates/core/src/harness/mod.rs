//! Instance generation, verification suites with CSV reports, and the command line front end.

pub mod cli;
pub mod generate;
pub mod suite;

pub use generate::{generate_instance, GeneratedInstance, Instance, InstanceClass, InstanceSpec, Strategy};
pub use suite::{fix_instance, run_suite, Record, ScalingFit, SuiteConfig, SuiteReport, SUITE_NAMES};
