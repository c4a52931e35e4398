//! Scenario files, run archives, the end-to-end pipeline, the validation
//! suite and plot data.

pub mod archive;
pub mod pipeline;
pub mod plotdata;
pub mod scenario;
pub mod validate;

pub use archive::{looks_like_archive, Archive, COLUMNS};
pub use pipeline::{reconstruct_run, reconstruct_window, run_scenario, select_return, simulate, summary, ReturnWindow, RunReport, Timing};
pub use plotdata::{plot_data, write_plot_data, PlotData};
pub use scenario::{Generator, InitialData, PhaseSpec, ReturnMode, ReturnSpec, Scenario};
pub use validate::{all_pass, format_table, run_validation, PropertyResult, ValidationOptions, NEAR_COLLINEAR};

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        Error::DriftBudget { .. } => EXIT_TOLERANCE,
        _ => EXIT_PHYSICS,
    }
}
