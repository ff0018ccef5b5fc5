//! Benchmark harness: manufactured convergence study, 2D lid-driven cavity,
//! error norms, rates, report emission and the Gauss-Radau quadrature probe.

pub mod cases;
pub mod errors;
pub mod probe;
pub mod report;
pub mod study;

pub use cases::{CavityCase2D, ExactSolution, ManufacturedCase, ZeroSolution};
pub use errors::{compute_errors, eoc, interpolate_trajectory, ErrorReport};
pub use probe::{loglog_slope, quadrature_error_probe, ProbeFields, ProbeResult};
pub use report::{csv_string, emit_report, read_csv, sci, text_table, write_csv, ReportFormat};
pub use study::{
    fill_eoc, run_cavity, run_cavity_case, run_convergence, run_manufactured, CavityHorizon, RunOutcome, RunRow,
    SolverConfig,
};
