use serde::{Deserialize, Serialize};

/// Tolerance used when comparing event times against window boundaries.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatientStatus {
    Pending,
    CompletedNoEvent,
    Dlt,
    ProgressedEvaluable,
    ProgressedUnevaluable,
}

impl PatientStatus {
    /// Terminal and counting toward the evaluable sample size.
    pub fn is_evaluable(self) -> bool {
        matches!(
            self,
            PatientStatus::CompletedNoEvent | PatientStatus::Dlt | PatientStatus::ProgressedEvaluable
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluability {
    Evaluable,
    Unevaluable,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: u32,
    pub enroll_time: f64,
    /// 1-based dose level.
    pub dose: usize,
    /// Weeks from enrollment to DLT.
    pub tox_time: Option<f64>,
    /// Weeks from enrollment to progression.
    pub prog_time: Option<f64>,
    /// Absolute time of the terminal event.
    pub end_time: Option<f64>,
    pub status: PatientStatus,
    /// Strategy C only: weight retained for an unevaluable progressor. `None`
    /// on such a patient means its follow-up was never used and is dropped.
    pub frozen_weight: Option<f64>,
}

impl PatientRecord {
    pub fn new(patient_id: u32, enroll_time: f64, dose: usize) -> Self {
        Self {
            patient_id,
            enroll_time,
            dose,
            tox_time: None,
            prog_time: None,
            end_time: None,
            status: PatientStatus::Pending,
            frozen_weight: None,
        }
    }

    pub fn is_pending(&self) -> bool {
        self.status == PatientStatus::Pending
    }
}

/// Evaluability of a patient for a threshold fraction `phi` of `window`.
pub fn evaluability(patient: &PatientRecord, phi: f64, window: f64) -> Evaluability {
    match patient.status {
        PatientStatus::Pending => Evaluability::Pending,
        PatientStatus::Dlt | PatientStatus::CompletedNoEvent => Evaluability::Evaluable,
        PatientStatus::ProgressedEvaluable | PatientStatus::ProgressedUnevaluable => {
            let p = patient.prog_time.unwrap_or(0.0);
            if phi == 0.0 || p + TIME_EPS >= phi * window {
                Evaluability::Evaluable
            } else {
                Evaluability::Unevaluable
            }
        }
    }
}
