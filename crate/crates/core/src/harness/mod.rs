//! Model and simulation runs, parameter sweeps, figure presets and CSV
//! output.

mod csv_io;
mod preset;
mod report;
mod sweep;

pub use csv_io::{
    read_error_summary, read_model_csv, read_sim_csv, write_error_summary, write_model_csv, write_sim_csv,
    MODEL_HEADER, SIM_HEADER, SUMMARY_HEADER,
};
pub use preset::{figure_preset, Preset, FIG4B_NEIGHBORS};
pub use report::{
    compare, compare_values, replicate, replicate_seeds, ErrorSummary, Run, RunReport, SimSettings,
    DEFAULT_REPLICATES, DEFAULT_TARGET,
};
pub use sweep::{sweep, SweepParameter, SweepSpec};
