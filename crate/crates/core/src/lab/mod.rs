//! Command-line plumbing: configuration, snapshots, reports and the
//! subcommands themselves.

pub mod commands;
pub mod config;
pub mod report;
pub mod snapshot;

pub use commands::{decoupling_sweep, execute, run, Cli, Command};
pub use config::ExperimentConfig;
pub use report::{Cell, Report, Table};
pub use snapshot::Snapshot;
