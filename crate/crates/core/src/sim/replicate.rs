//! One simulated trial: fixed-interval accrual, latent outcomes drawn at
//! enrollment, terminal events folded into the engine in time order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::crm::PosteriorModel;
use crate::design::{DesignConfig, Strategy};
use crate::engine::{TrialEvent, TrialState, TrialSummary};
use crate::error::{Error, Result};
use crate::scenario::{draw_outcome, patient_rng, ObservedOutcome, ScenarioSpec};

/// Resolution of simulated event times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrid {
    /// Event times kept as drawn.
    #[default]
    Continuous,
    /// Event times rounded up to the next whole week (weekly assessments).
    Weekly,
}

/// Identifies the latent-outcome streams of one replicate. Strategies run
/// with the same seed see the same per-patient streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateSeed {
    pub base_seed: u64,
    pub replicate: u64,
}

/// Simulates a complete trial and returns its final state, including the
/// event log.
pub fn simulate_trial(
    design: &DesignConfig,
    model: &Arc<PosteriorModel>,
    scenario: &ScenarioSpec,
    strategy: Strategy,
    seed: ReplicateSeed,
    grid: TimeGrid,
) -> Result<TrialState> {
    if scenario.num_doses() != design.num_doses {
        return Err(Error::InvalidScenario(format!(
            "{} has {} doses, design has {}",
            scenario.label,
            scenario.num_doses(),
            design.num_doses
        )));
    }
    let window = design.window;
    let state = TrialState::with_model(design.clone(), Arc::clone(model), strategy)?;
    drive_trial(
        state,
        |_| design.accrual_interval,
        |patient_id, dose| {
            let mut rng = patient_rng(seed.base_seed, seed.replicate, patient_id);
            let mut latent = draw_outcome(scenario, dose, window, &mut rng);
            if grid == TimeGrid::Weekly {
                latent = latent.rounded_up(window);
            }
            Ok(latent.observed(window))
        },
    )
}

/// Runs `state` to completion. The first patient arrives at time 0 and
/// patient `i + 1` arrives `gap_after(i)` weeks after patient `i` was
/// enrolled; `outcome(patient_id, dose)` gives the observed outcome relative
/// to enrollment. Terminal events due no later than the next arrival are
/// processed first. While the gate is closed arrivals wait, and the first
/// one after it reopens is enrolled at the reopening time.
pub fn drive_trial(
    mut state: TrialState,
    mut gap_after: impl FnMut(u32) -> f64,
    mut outcome: impl FnMut(u32, usize) -> Result<ObservedOutcome>,
) -> Result<TrialState> {
    let window = state.design().window;
    let mut scheduled: Vec<TrialEvent> = Vec::new();
    let mut next_arrival = 0.0_f64;

    loop {
        let next_event = scheduled
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.time.total_cmp(&b.time).then(a.patient_id.cmp(&b.patient_id)))
            .map(|(i, e)| (i, e.time));

        let open = state.enrollment_open();
        if open && next_event.map_or(true, |(_, t)| t > next_arrival) {
            let dose = state.assign_next_patient(next_arrival)?;
            let patient_id = state.patients().len() as u32;
            let t0 = next_arrival;
            scheduled.push(match outcome(patient_id, dose)? {
                ObservedOutcome::Dlt(u) => TrialEvent::dlt(t0 + u, patient_id),
                ObservedOutcome::Progression(p) => TrialEvent::progression(t0 + p, patient_id),
                ObservedOutcome::Complete => TrialEvent::completed(t0 + window, patient_id),
            });
            next_arrival += gap_after(patient_id);
        } else if let Some((i, _)) = next_event {
            let event = scheduled.swap_remove(i);
            state.apply(&event)?;
            if !open && state.enrollment_open() {
                next_arrival = next_arrival.max(event.time);
            }
        } else {
            break;
        }
    }
    Ok(state)
}

/// Simulates one trial and returns its summary metrics.
pub fn run_replicate(
    design: &DesignConfig,
    model: &Arc<PosteriorModel>,
    scenario: &ScenarioSpec,
    strategy: Strategy,
    seed: ReplicateSeed,
    grid: TimeGrid,
) -> Result<TrialSummary> {
    simulate_trial(design, model, scenario, strategy, seed, grid)?.finalize()
}
