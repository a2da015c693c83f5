//! Config-driven sweeps over `(d, eps)` grids and their CSV/JSON output.

mod config;
mod emit;
mod run;

pub use config::{ExplicitCoordinate, FamilyConfig, Output, ParamGenerator, SweepConfig};
pub use emit::{
    emit, from_csv, from_json, render, to_csv, to_json, Format, COMPLEXITY_HEADER, CRITERION_HEADER,
    ERROR_CURVE_HEADER, FIT_HEADER,
};
pub use run::{
    run_sweep, run_sweep_on_threads, run_sweep_with, ComplexityRow, CriterionRow, ErrorCurveRow, FitRow, SweepResult,
    MAX_ERROR_CURVE_LEN,
};
