//! Monte Carlo operating characteristics over a grid of scenarios.

pub mod calibrate;
pub mod compare;
pub mod replicate;
pub mod report;
pub mod script;
pub mod study;

pub use calibrate::{calibrate_halfwidth, HalfwidthScore};
pub use compare::{compare_strategies, CellComparison, ComparisonReport, Delta, ORDERING_SE_MULTIPLIER};
pub use replicate::{drive_trial, run_replicate, simulate_trial, ReplicateSeed, TimeGrid};
pub use report::{comparison_csv, selection_csv, summary_csv, COMPARISON_HEADER, SELECTION_HEADER, SUMMARY_HEADER};
pub use script::{ScriptedOutcome, ScriptedPatient, TrialScript};
pub use study::{
    design_model, run_cell, run_cell_outcomes, run_study, Accumulator, CellKey, CellResult, McErrors,
    OperatingCharacteristics, ReplicateOutcome, StudyConfig,
};
