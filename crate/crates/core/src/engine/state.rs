//! The sequential trial state machine.
//!
//! A [`TrialState`] is the fold of its event log. Enrollment events carry the
//! dose actually given; terminal events carry only their time. Every
//! enrollment also writes an [`AssignmentRecord`] holding the per-patient
//! weights that the assignment was computed from, which is what strategy C
//! freezes when an early progressor turns out unevaluable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::event::{EventKind, TrialEvent};
use super::patient::{evaluability, Evaluability, PatientRecord, PatientStatus, TIME_EPS};
use crate::crm::{recommend_dose, Estimate, Observation, PosteriorModel, Skeleton};
use crate::design::{DesignConfig, Strategy};
use crate::error::{Error, Result};

/// One observation of a snapshot, tagged with the patient it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub patient_id: u32,
    #[serde(flatten)]
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub time: f64,
    pub patient_id: u32,
    pub dose: usize,
    /// `(patient_id, weight)` for every observation the assignment used.
    pub weights: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub at_time: f64,
    pub dose: usize,
    pub estimate: Estimate,
    pub snapshot: Vec<SnapshotEntry>,
}

/// Per-trial metrics produced once every patient is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub selected_dose: usize,
    pub enrolled: usize,
    pub added_patients: usize,
    pub duration: f64,
    /// Patients assigned to each dose level, index 0 = dose 1.
    pub dose_counts: Vec<usize>,
    pub dlt_count: usize,
    pub unevaluable_count: usize,
    pub beta_mean: f64,
}

/// How a patient's follow-up currently enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    Included,
    /// Only the first part of the follow-up is used (strategy C freeze).
    Partial,
    Excluded,
}

/// A patient's lane in a swimlane view of the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSegment {
    pub patient_id: u32,
    pub dose: usize,
    pub enroll_time: f64,
    /// Terminal event time, or the view time for pending patients.
    pub end_time: f64,
    pub status: PatientStatus,
    pub evaluability: Evaluability,
    /// Weight in the likelihood at the view time, `None` when excluded.
    pub weight: Option<f64>,
    /// Absolute time up to which follow-up is included.
    pub included_until: Option<f64>,
    pub inclusion: Inclusion,
}

#[derive(Debug, Clone)]
pub struct TrialState {
    design: DesignConfig,
    strategy: Strategy,
    model: Arc<PosteriorModel>,
    clock: f64,
    patients: Vec<PatientRecord>,
    assignment_log: Vec<AssignmentRecord>,
    events: Vec<TrialEvent>,
    enrollment_open: bool,
}

impl PartialEq for TrialState {
    fn eq(&self, other: &Self) -> bool {
        self.design == other.design
            && self.strategy == other.strategy
            && self.model.skeleton() == other.model.skeleton()
            && self.clock == other.clock
            && self.patients == other.patients
            && self.assignment_log == other.assignment_log
            && self.events == other.events
            && self.enrollment_open == other.enrollment_open
    }
}

impl TrialState {
    /// Fresh trial with the calibrated skeleton of `design`.
    pub fn new(design: DesignConfig, strategy: Strategy) -> Result<Self> {
        design.validate()?;
        let skeleton = Skeleton::build(design.target, design.halfwidth, design.prior_mtd, design.num_doses)?;
        Self::with_skeleton(design, skeleton, strategy)
    }

    pub fn with_skeleton(design: DesignConfig, skeleton: Skeleton, strategy: Strategy) -> Result<Self> {
        design.validate()?;
        if skeleton.num_doses() != design.num_doses {
            return Err(Error::InvalidDesign(format!(
                "skeleton has {} levels, design has {}",
                skeleton.num_doses(),
                design.num_doses
            )));
        }
        let model = Arc::new(PosteriorModel::new(skeleton, design.prior_sd)?);
        Self::with_model(design, model, strategy)
    }

    /// Shares a precomputed posterior model, e.g. across simulated replicates.
    pub fn with_model(design: DesignConfig, model: Arc<PosteriorModel>, strategy: Strategy) -> Result<Self> {
        design.validate()?;
        Ok(Self {
            design,
            strategy,
            model,
            clock: 0.0,
            patients: Vec::new(),
            assignment_log: Vec::new(),
            events: Vec::new(),
            enrollment_open: true,
        })
    }

    /// Rebuilds a state by folding `events` into a fresh trial.
    pub fn replay(
        design: DesignConfig,
        skeleton: Skeleton,
        strategy: Strategy,
        events: &[TrialEvent],
    ) -> Result<Self> {
        let mut state = Self::with_skeleton(design, skeleton, strategy)?;
        for e in events {
            state.apply(e)?;
        }
        Ok(state)
    }

    pub fn design(&self) -> &DesignConfig {
        &self.design
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn skeleton(&self) -> &Skeleton {
        self.model.skeleton()
    }

    pub fn model(&self) -> &Arc<PosteriorModel> {
        &self.model
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn patients(&self) -> &[PatientRecord] {
        &self.patients
    }

    pub fn patient(&self, patient_id: u32) -> Option<&PatientRecord> {
        self.patients.get((patient_id as usize).checked_sub(1)?)
    }

    pub fn assignment_log(&self) -> &[AssignmentRecord] {
        &self.assignment_log
    }

    pub fn events(&self) -> &[TrialEvent] {
        &self.events
    }

    pub fn enrollment_open(&self) -> bool {
        self.enrollment_open
    }

    /// Threshold fraction in force (0 under strategy A).
    pub fn phi(&self) -> f64 {
        self.strategy.effective_phi(self.design.phi)
    }

    pub fn evaluable_count(&self) -> usize {
        self.patients.iter().filter(|p| p.status.is_evaluable()).count()
    }

    pub fn pending_count(&self) -> usize {
        self.patients.iter().filter(|p| p.is_pending()).count()
    }

    pub fn unevaluable_count(&self) -> usize {
        self.patients
            .iter()
            .filter(|p| p.status == PatientStatus::ProgressedUnevaluable)
            .count()
    }

    /// Highest dose given so far, 0 before the first enrollment.
    pub fn highest_tried(&self) -> usize {
        self.patients.iter().map(|p| p.dose).max().unwrap_or(0)
    }

    /// Open while evaluable plus pending patients fall short of the sample
    /// size. Pending patients count optimistically; an unevaluable outcome
    /// reopens the gate.
    pub fn enrollment_gate(&self) -> bool {
        self.evaluable_count() + self.pending_count() < self.design.sample_size
    }

    /// Weighted observations available at time `now` under the trial's strategy.
    pub fn likelihood_snapshot(&self, now: f64) -> Vec<SnapshotEntry> {
        let window = self.design.window;
        let mut out = Vec::with_capacity(self.patients.len());
        for p in &self.patients {
            let (tox, weight) = match p.status {
                PatientStatus::Dlt => (true, 1.0),
                PatientStatus::CompletedNoEvent => (false, 1.0),
                PatientStatus::Pending => (false, ((now - p.enroll_time) / window).clamp(0.0, 1.0)),
                PatientStatus::ProgressedEvaluable => (false, progression_weight(p, window)),
                PatientStatus::ProgressedUnevaluable => match self.strategy {
                    Strategy::A | Strategy::B => (false, progression_weight(p, window)),
                    Strategy::C => match p.frozen_weight {
                        Some(w) => (false, w),
                        None => continue,
                    },
                },
            };
            out.push(SnapshotEntry {
                patient_id: p.patient_id,
                observation: Observation { dose: p.dose, tox, weight },
            });
        }
        out
    }

    pub fn observations(&self, now: f64) -> Vec<Observation> {
        self.likelihood_snapshot(now).into_iter().map(|e| e.observation).collect()
    }

    /// Next-patient recommendation at `now`, with the estimate and the
    /// snapshot it was computed from.
    pub fn recommendation(&self, now: f64) -> Result<Recommendation> {
        self.check_time(now)?;
        let snapshot = self.likelihood_snapshot(now);
        self.recommend_from(now, snapshot)
    }

    fn recommend_from(&self, now: f64, snapshot: Vec<SnapshotEntry>) -> Result<Recommendation> {
        let obs: Vec<Observation> = snapshot.iter().map(|e| e.observation).collect();
        let estimate = self.model.estimate(&obs)?;
        let dose = recommend_dose(&self.model, &obs, &self.design, self.highest_tried(), true)?;
        Ok(Recommendation { at_time: now, dose, estimate, snapshot })
    }

    /// Enrolls the next patient at `now` at the recommended dose.
    pub fn assign_next_patient(&mut self, now: f64) -> Result<usize> {
        if !self.enrollment_open {
            return Err(Error::EnrollmentClosed);
        }
        self.check_time(now)?;
        let snapshot = self.likelihood_snapshot(now);
        let rec = self.recommend_from(now, snapshot)?;
        let event = TrialEvent::enrolled(now, self.patients.len() as u32 + 1, rec.dose);
        self.enroll(&event, rec.dose, rec.snapshot)?;
        Ok(rec.dose)
    }

    /// Applies one event. The state is left untouched when the event is rejected.
    pub fn apply(&mut self, event: &TrialEvent) -> Result<()> {
        self.check_time(event.time)?;
        match event.kind {
            EventKind::Enrolled { dose } => {
                let snapshot = self.likelihood_snapshot(event.time);
                self.enroll(event, dose, snapshot)
            }
            kind => self.resolve(event, kind),
        }
    }

    fn check_time(&self, time: f64) -> Result<()> {
        if !time.is_finite() || time < self.clock {
            return Err(Error::OutOfOrder { time, clock: self.clock });
        }
        Ok(())
    }

    fn enroll(&mut self, event: &TrialEvent, dose: usize, snapshot: Vec<SnapshotEntry>) -> Result<()> {
        if !self.enrollment_open {
            return Err(Error::EnrollmentClosed);
        }
        let expected = self.patients.len() as u32 + 1;
        if event.patient_id != expected {
            return Err(Error::InvalidEvent {
                patient_id: event.patient_id,
                reason: format!("next patient id is {expected}"),
            });
        }
        if dose < 1 || dose > self.design.num_doses {
            return Err(Error::InvalidEvent {
                patient_id: event.patient_id,
                reason: format!("dose {dose} outside 1..={}", self.design.num_doses),
            });
        }
        self.assignment_log.push(AssignmentRecord {
            time: event.time,
            patient_id: event.patient_id,
            dose,
            weights: snapshot.iter().map(|e| (e.patient_id, e.observation.weight)).collect(),
        });
        self.patients.push(PatientRecord::new(event.patient_id, event.time, dose));
        self.commit(event);
        Ok(())
    }

    fn resolve(&mut self, event: &TrialEvent, kind: EventKind) -> Result<()> {
        let window = self.design.window;
        let phi = self.phi();
        let idx = (event.patient_id as usize)
            .checked_sub(1)
            .filter(|i| *i < self.patients.len())
            .ok_or(Error::UnknownPatient(event.patient_id))?;
        let patient = &self.patients[idx];
        if !patient.is_pending() {
            return Err(Error::DuplicateTerminal { patient_id: event.patient_id });
        }
        let elapsed = event.time - patient.enroll_time;
        let invalid = |reason: String| Error::InvalidEvent { patient_id: event.patient_id, reason };

        let mut updated = patient.clone();
        updated.end_time = Some(event.time);
        match kind {
            EventKind::DltObserved => {
                if elapsed > window + TIME_EPS {
                    return Err(invalid(format!("DLT {elapsed} weeks after enrollment is outside the window")));
                }
                updated.tox_time = Some(elapsed);
                updated.status = PatientStatus::Dlt;
            }
            EventKind::ProgressionObserved => {
                if elapsed >= window - TIME_EPS {
                    return Err(invalid(format!(
                        "progression {elapsed} weeks after enrollment is not within the window; record window completion"
                    )));
                }
                updated.prog_time = Some(elapsed);
                updated.status = PatientStatus::ProgressedEvaluable;
                if evaluability(&updated, phi, window) == Evaluability::Unevaluable {
                    updated.status = PatientStatus::ProgressedUnevaluable;
                    if self.strategy == Strategy::C {
                        updated.frozen_weight = self.frozen_weight(event.patient_id, event.time, elapsed / window);
                    }
                }
            }
            EventKind::WindowCompleted => {
                if elapsed < window - TIME_EPS {
                    return Err(invalid(format!("window completion after only {elapsed} weeks")));
                }
                updated.status = PatientStatus::CompletedNoEvent;
            }
            EventKind::Enrolled { .. } => unreachable!("enrollments are handled separately"),
        }
        self.patients[idx] = updated;
        self.commit(event);
        Ok(())
    }

    /// Weight the patient carried in the latest assignment strictly before
    /// `recorded_at`, capped at `cap`. `None` if no such assignment used it.
    fn frozen_weight(&self, patient_id: u32, recorded_at: f64, cap: f64) -> Option<f64> {
        self.assignment_log
            .iter()
            .rev()
            .filter(|a| a.time < recorded_at)
            .find_map(|a| a.weights.iter().find(|(id, _)| *id == patient_id).map(|(_, w)| *w))
            .map(|w| w.min(cap))
    }

    fn commit(&mut self, event: &TrialEvent) {
        self.clock = event.time;
        self.events.push(*event);
        self.enrollment_open = self.enrollment_gate();
    }

    /// Final MTD and per-trial metrics. Requires every patient resolved and
    /// exactly `sample_size` evaluable patients.
    pub fn finalize(&self) -> Result<TrialSummary> {
        if self.pending_count() > 0 {
            return Err(Error::NotFinalizable(format!("{} patients still pending", self.pending_count())));
        }
        let evaluable = self.evaluable_count();
        if evaluable != self.design.sample_size {
            return Err(Error::NotFinalizable(format!(
                "{evaluable} evaluable patients, design requires {}",
                self.design.sample_size
            )));
        }
        let obs = self.observations(self.clock);
        let estimate = self.model.estimate(&obs)?;
        let selected_dose = recommend_dose(&self.model, &obs, &self.design, self.highest_tried(), false)?;

        let mut dose_counts = vec![0; self.design.num_doses];
        for p in &self.patients {
            dose_counts[p.dose - 1] += 1;
        }
        let first = self.patients.first().map_or(0.0, |p| p.enroll_time);
        let last = self.patients.iter().filter_map(|p| p.end_time).fold(first, f64::max);
        Ok(TrialSummary {
            selected_dose,
            enrolled: self.patients.len(),
            added_patients: self.patients.len() - self.design.sample_size,
            duration: last - first,
            dose_counts,
            dlt_count: self.patients.iter().filter(|p| p.status == PatientStatus::Dlt).count(),
            unevaluable_count: self.unevaluable_count(),
            beta_mean: estimate.beta_mean,
        })
    }

    /// Per-patient lanes at time `now` for a swimlane view.
    pub fn timeline(&self, now: f64) -> Vec<PatientSegment> {
        let window = self.design.window;
        let phi = self.phi();
        let weights: std::collections::HashMap<u32, f64> = self
            .likelihood_snapshot(now)
            .into_iter()
            .map(|e| (e.patient_id, e.observation.weight))
            .collect();
        self.patients
            .iter()
            .map(|p| {
                let end_time = p.end_time.unwrap_or(now.max(p.enroll_time));
                let weight = weights.get(&p.patient_id).copied();
                let full = match p.status {
                    PatientStatus::Dlt => 1.0,
                    _ => ((end_time - p.enroll_time) / window).min(1.0),
                };
                let (inclusion, included_until) = match weight {
                    None => (Inclusion::Excluded, None),
                    Some(w) if p.status == PatientStatus::Dlt || w + TIME_EPS >= full => {
                        (Inclusion::Included, Some(end_time))
                    }
                    Some(w) if w <= 0.0 => (Inclusion::Excluded, None),
                    Some(w) => (Inclusion::Partial, Some(p.enroll_time + w * window)),
                };
                PatientSegment {
                    patient_id: p.patient_id,
                    dose: p.dose,
                    enroll_time: p.enroll_time,
                    end_time,
                    status: p.status,
                    evaluability: evaluability(p, phi, window),
                    weight,
                    included_until,
                    inclusion,
                }
            })
            .collect()
    }
}

fn progression_weight(p: &PatientRecord, window: f64) -> f64 {
    (p.prog_time.unwrap_or(0.0) / window).clamp(0.0, 1.0)
}
