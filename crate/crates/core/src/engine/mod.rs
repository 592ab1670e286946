//! Sequential trial engine shared by the simulator and the conduct service.

pub mod event;
pub mod patient;
pub mod state;

pub use event::{read_log, write_event, write_log, EventKind, LogError, TrialEvent};
pub use patient::{evaluability, Evaluability, PatientRecord, PatientStatus};
pub use state::{
    AssignmentRecord, Inclusion, PatientSegment, Recommendation, SnapshotEntry, TrialState, TrialSummary,
};

#[cfg(test)]
mod tests;
