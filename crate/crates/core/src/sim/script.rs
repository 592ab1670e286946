//! Hand-written trials: fixed arrival gaps and per-patient outcomes, with the
//! doses still chosen by the design.

use serde::{Deserialize, Serialize};

use super::replicate::drive_trial;
use crate::design::{DesignConfig, Strategy};
use crate::engine::TrialState;
use crate::error::{Error, Result};
use crate::scenario::ObservedOutcome;

/// Outcome relative to enrollment, in weeks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum ScriptedOutcome {
    Complete,
    Dlt(f64),
    Progression(f64),
}

impl From<ScriptedOutcome> for ObservedOutcome {
    fn from(o: ScriptedOutcome) -> Self {
        match o {
            ScriptedOutcome::Complete => ObservedOutcome::Complete,
            ScriptedOutcome::Dlt(u) => ObservedOutcome::Dlt(u),
            ScriptedOutcome::Progression(p) => ObservedOutcome::Progression(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedPatient {
    pub outcome: ScriptedOutcome,
    /// Outcome when treated at or below `dose`, overriding `outcome`.
    #[serde(default)]
    pub at_or_below: Option<(usize, ScriptedOutcome)>,
    /// Weeks until the next arrival; the script default when absent.
    #[serde(default)]
    pub gap_after: Option<f64>,
}

impl ScriptedPatient {
    fn outcome_at(&self, dose: usize) -> ScriptedOutcome {
        match self.at_or_below {
            Some((d, o)) if dose <= d => o,
            _ => self.outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialScript {
    pub design: DesignConfig,
    pub default_gap: f64,
    /// Patients in enrollment order. Running past the end is an error.
    pub patients: Vec<ScriptedPatient>,
}

impl TrialScript {
    pub fn run(&self, strategy: Strategy) -> Result<TrialState> {
        let state = TrialState::new(self.design.clone(), strategy)?;
        let n = self.patients.len();
        let exhausted = |id: u32| Error::InvalidScenario(format!("script has {n} patients, trial needs patient {id}"));
        let gaps: Vec<f64> = self.patients.iter().map(|p| p.gap_after.unwrap_or(self.default_gap)).collect();
        drive_trial(
            state,
            |id| gaps.get(id as usize - 1).copied().unwrap_or(self.default_gap),
            |id, dose| {
                let p = self.patients.get(id as usize - 1).ok_or_else(|| exhausted(id))?;
                Ok(p.outcome_at(dose).into())
            },
        )
    }
}
