//! Weak-form and entropy residuals, reference solutions and convergence studies.

mod reference;
mod report;
mod residual;
mod study;
mod testfn;

pub use reference::{
    exact_reference, l1_distance, smoothed_reference, ExactProblem, ExactReference, Profile, SmoothedReference, Snapshot,
};
pub use report::{log_log_svg, table_csv, table_summary, table_svg, CSV_HEADER};
pub use residual::{
    cell_moment, divergence_defect, entropy_residual, moment_defect, residual_report, support_cells, weak_residual,
    EntropyEntry, ResidualContext, ResidualReport,
};
pub use study::{
    burgers_expansion_experiment, burgers_shock_experiment, convergence_study, counterexample_experiment,
    ConvergenceTable, Experiment, ModelKind, ReferenceKind, Run, SchemeKind, StudyRow, TimeStep,
};
pub use testfn::{default_battery, TestFunction};
