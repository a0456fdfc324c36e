//! Config parsing, report emission and exit-code policy shared by the
//! `l1dev` binary and the C ABI.

pub mod config;
pub mod report;

pub use config::{parse_config, ExperimentConfig, TaskConfig, TaskKind, Workers};
pub use report::{emit_plot_data, emit_report, Format, Report, ResultRow};

use crate::error::Error;

/// Environment variable overriding the worker count when the config says `auto`.
pub const WORKERS_ENV: &str = "L1DEV_WORKERS";

pub const EXIT_CONSISTENT: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_VIOLATED: i32 = 10;

pub fn exit_code_for_report(report: &Report) -> i32 {
    if report.any_violated() {
        EXIT_VIOLATED
    } else {
        EXIT_CONSISTENT
    }
}

pub fn exit_code_for_error(err: &Error) -> i32 {
    match err {
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_USAGE,
    }
}
