use thiserror::Error;

/// Errors raised by the model, the trial engine and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("non-finite posterior integrand at beta = {beta}")]
    NonFiniteIntegrand { beta: f64 },

    #[error("event at t={time} precedes trial clock t={clock}")]
    OutOfOrder { time: f64, clock: f64 },

    #[error("unknown patient {0}")]
    UnknownPatient(u32),

    #[error("patient {patient_id} already has a terminal event")]
    DuplicateTerminal { patient_id: u32 },

    #[error("invalid event for patient {patient_id}: {reason}")]
    InvalidEvent { patient_id: u32, reason: String },

    #[error("enrollment is closed")]
    EnrollmentClosed,

    #[error("trial cannot be finalized: {0}")]
    NotFinalizable(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid study config: {0}")]
    InvalidConfig(String),

    #[error("missing comparison cell: {0}")]
    MissingCell(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
