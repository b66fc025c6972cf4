//! The convergence-study driver: configuration, study cells, rate fits and
//! output files.

pub mod config;
pub mod output;
pub mod study;

pub use config::{ExperimentConfig, Target};
pub use output::{emit_plot_data, write_emulate_outputs, write_hellinger_outputs, write_study_outputs};
pub use study::{
    build_emulators, emulator_diagnostics, fit_rates, midpoint_grid, run_convergence_study,
    run_emulate, run_hellinger_study, target_values, CellFailure, EmulateRow, EmulatorDiagnostics,
    RateRow, StudyReport, StudyRow,
};
