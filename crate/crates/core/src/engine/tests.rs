use super::*;
use crate::crm::Observation;
use crate::design::{DesignConfig, Strategy};
use crate::error::Error;

fn design(n: usize) -> DesignConfig {
    DesignConfig { sample_size: n, ..DesignConfig::default() }
}

fn state(strategy: Strategy) -> TrialState {
    TrialState::new(design(18), strategy).unwrap()
}

fn obs_of(s: &TrialState, now: f64, id: u32) -> Option<Observation> {
    s.likelihood_snapshot(now)
        .into_iter()
        .find(|e| e.patient_id == id)
        .map(|e| e.observation)
}

#[test]
fn early_progressor_keeps_partial_followup_under_a_and_b() {
    for strategy in [Strategy::A, Strategy::B] {
        let mut s = state(strategy);
        s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
        s.apply(&TrialEvent::progression(2.0, 1)).unwrap();
        let o = obs_of(&s, 6.0, 1).unwrap();
        assert_eq!(o, Observation { dose: 1, tox: false, weight: 0.25 });
    }
}

#[test]
fn unused_early_progressor_is_dropped_under_c() {
    let mut s = state(Strategy::C);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::progression(2.0, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().status, PatientStatus::ProgressedUnevaluable);
    assert_eq!(s.patient(1).unwrap().frozen_weight, None);
    assert!(obs_of(&s, 6.0, 1).is_none());
    s.assign_next_patient(6.0).unwrap();
    assert!(s.assignment_log()[1].weights.iter().all(|(id, _)| *id != 1));
}

#[test]
fn used_early_progressor_is_frozen_under_c() {
    let mut s = state(Strategy::C);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(3.0, 2, 1)).unwrap();
    s.apply(&TrialEvent::progression(3.5, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().frozen_weight, Some(3.0 / 8.0));
    for now in [3.5, 6.0, 20.0] {
        assert_eq!(obs_of(&s, now, 1).unwrap().weight, 3.0 / 8.0);
    }
    // B on the same history keeps the whole 3.5 weeks
    let mut b = state(Strategy::B);
    for e in s.events() {
        b.apply(e).unwrap();
    }
    assert_eq!(obs_of(&b, 6.0, 1).unwrap().weight, 3.5 / 8.0);
}

#[test]
fn progression_at_assignment_time_is_not_frozen() {
    // assignment and progression recorded at the same instant: the assignment
    // is not strictly before the progression, so nothing was used
    let mut s = state(Strategy::C);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(3.0, 2, 1)).unwrap();
    s.apply(&TrialEvent::progression(3.0, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().frozen_weight, None);
}

#[test]
fn strategies_agree_without_progression() {
    let events = [
        TrialEvent::enrolled(0.0, 1, 1),
        TrialEvent::enrolled(4.0, 2, 2),
        TrialEvent::dlt(6.0, 2),
        TrialEvent::completed(8.0, 1),
        TrialEvent::enrolled(8.0, 3, 1),
    ];
    let snaps: Vec<_> = Strategy::ALL
        .iter()
        .map(|st| {
            let mut s = state(*st);
            for e in &events {
                s.apply(e).unwrap();
            }
            s.likelihood_snapshot(10.0)
        })
        .collect();
    assert_eq!(snaps[0], snaps[1]);
    assert_eq!(snaps[1], snaps[2]);
}

#[test]
fn terminal_transitions() {
    let mut s = state(Strategy::B);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(1.0, 2, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(2.0, 3, 1)).unwrap();
    s.apply(&TrialEvent::progression(5.0, 3)).unwrap();
    assert_eq!(s.patient(3).unwrap().status, PatientStatus::ProgressedUnevaluable);
    s.apply(&TrialEvent::dlt(5.0, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().status, PatientStatus::Dlt);
    assert_eq!(obs_of(&s, 20.0, 1).unwrap(), Observation { dose: 1, tox: true, weight: 1.0 });
    s.apply(&TrialEvent::completed(9.0, 2)).unwrap();
    assert_eq!(s.patient(2).unwrap().status, PatientStatus::CompletedNoEvent);
}

#[test]
fn rejects_bad_events() {
    let mut s = state(Strategy::B);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(4.0, 2, 1)).unwrap();
    let before = s.clone();
    assert!(matches!(s.apply(&TrialEvent::dlt(3.0, 1)), Err(Error::OutOfOrder { .. })));
    assert!(matches!(s.apply(&TrialEvent::dlt(5.0, 9)), Err(Error::UnknownPatient(9))));
    assert!(matches!(s.apply(&TrialEvent::completed(5.0, 1)), Err(Error::InvalidEvent { .. })));
    assert!(matches!(s.apply(&TrialEvent::dlt(9.0, 1)), Err(Error::InvalidEvent { .. })));
    assert!(matches!(s.apply(&TrialEvent::enrolled(5.0, 5, 1)), Err(Error::InvalidEvent { .. })));
    assert!(matches!(s.apply(&TrialEvent::enrolled(5.0, 3, 6)), Err(Error::InvalidEvent { .. })));
    assert_eq!(s, before);
    s.apply(&TrialEvent::dlt(5.0, 1)).unwrap();
    assert!(matches!(s.apply(&TrialEvent::completed(8.0, 1)), Err(Error::DuplicateTerminal { patient_id: 1 })));
    assert!(matches!(s.apply(&TrialEvent::progression(12.0, 2)), Err(Error::InvalidEvent { .. })));
}

#[test]
fn gate_counts_pending_optimistically_and_reopens() {
    let mut s = state(Strategy::B);
    for id in 1..=17 {
        s.apply(&TrialEvent::enrolled(0.0, id, 1)).unwrap();
    }
    for id in 1..=17 {
        s.apply(&TrialEvent::completed(8.0, id)).unwrap();
    }
    s.apply(&TrialEvent::enrolled(8.0, 18, 2)).unwrap();
    assert_eq!(s.evaluable_count(), 17);
    assert_eq!(s.pending_count(), 1);
    assert!(!s.enrollment_gate());
    assert!(matches!(s.assign_next_patient(9.0), Err(Error::EnrollmentClosed)));
    s.apply(&TrialEvent::progression(11.0, 18)).unwrap();
    assert!(s.enrollment_open());
    s.assign_next_patient(12.0).unwrap();
    assert_eq!(s.patients().len(), 19);
}

#[test]
fn strategy_a_never_replaces() {
    let mut s = TrialState::new(design(3), Strategy::A).unwrap();
    for id in 1..=3 {
        s.apply(&TrialEvent::enrolled(id as f64, id, 1)).unwrap();
    }
    assert!(!s.enrollment_open());
    s.apply(&TrialEvent::progression(4.0, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().status, PatientStatus::ProgressedEvaluable);
    assert!(!s.enrollment_open());
}

#[test]
fn phi_one_makes_every_progressor_unevaluable() {
    let d = DesignConfig { phi: 1.0, ..design(4) };
    let mut s = TrialState::new(d, Strategy::B).unwrap();
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::progression(7.9, 1)).unwrap();
    assert_eq!(s.patient(1).unwrap().status, PatientStatus::ProgressedUnevaluable);
}

#[test]
fn first_assignment_and_no_skip() {
    let mut s = state(Strategy::A);
    assert_eq!(s.assign_next_patient(0.0).unwrap(), 1);
    s.apply(&TrialEvent::completed(8.0, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(8.0, 2, 1)).unwrap();
    s.apply(&TrialEvent::completed(16.0, 2)).unwrap();
    assert!(s.assign_next_patient(16.0).unwrap() <= 2);
}

#[test]
fn finalize_requires_resolution() {
    let mut s = TrialState::new(design(2), Strategy::B).unwrap();
    s.assign_next_patient(0.0).unwrap();
    s.assign_next_patient(4.0).unwrap();
    assert!(matches!(s.finalize(), Err(Error::NotFinalizable(_))));
    s.apply(&TrialEvent::completed(8.0, 1)).unwrap();
    s.apply(&TrialEvent::dlt(9.0, 2)).unwrap();
    let summary = s.finalize().unwrap();
    assert_eq!(summary.added_patients, 0);
    assert_eq!(summary.enrolled, 2);
    assert_eq!(summary.duration, 9.0);
    assert_eq!(summary.dlt_count, 1);
    assert_eq!(summary.dose_counts.iter().sum::<usize>(), 2);
}

#[test]
fn replay_reproduces_state() {
    let mut s = state(Strategy::C);
    s.assign_next_patient(0.0).unwrap();
    s.assign_next_patient(4.0).unwrap();
    s.apply(&TrialEvent::progression(5.0, 2)).unwrap();
    s.apply(&TrialEvent::completed(8.0, 1)).unwrap();
    s.assign_next_patient(8.0).unwrap();
    let r = TrialState::replay(s.design().clone(), s.skeleton().clone(), Strategy::C, s.events()).unwrap();
    assert_eq!(r, s);
}

#[test]
fn timeline_marks_exclusions() {
    let mut s = state(Strategy::C);
    s.apply(&TrialEvent::enrolled(0.0, 1, 1)).unwrap();
    s.apply(&TrialEvent::progression(2.0, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(4.0, 2, 1)).unwrap();
    s.apply(&TrialEvent::enrolled(5.0, 3, 1)).unwrap();
    s.apply(&TrialEvent::progression(7.0, 2)).unwrap();
    s.apply(&TrialEvent::dlt(8.0, 3)).unwrap();
    let lanes = s.timeline(8.0);
    assert_eq!(lanes[0].inclusion, Inclusion::Excluded);
    assert_eq!(lanes[1].inclusion, Inclusion::Partial);
    assert_eq!(lanes[1].included_until, Some(5.0));
    assert_eq!(lanes[2].inclusion, Inclusion::Included);
    assert_eq!(lanes[2].status, PatientStatus::Dlt);
}
