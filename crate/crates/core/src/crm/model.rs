//! One-parameter empirical dose-toxicity model and the TITE weighted likelihood.

use serde::{Deserialize, Serialize};

use super::skeleton::Skeleton;
use crate::error::{Error, Result};

/// Bounds applied to `w * psi` inside the likelihood so that neither log
/// argument reaches zero.
pub const PROB_CLAMP: f64 = 1e-12;

/// One patient's contribution to the weighted likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// 1-based dose level.
    pub dose: usize,
    pub tox: bool,
    pub weight: f64,
}

impl Observation {
    pub fn new(dose: usize, tox: bool, weight: f64) -> Result<Self> {
        let obs = Self { dose, tox, weight };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::InvalidObservation(format!("weight {} outside [0, 1]", self.weight)));
        }
        if self.tox && self.weight != 1.0 {
            return Err(Error::InvalidObservation(format!(
                "toxicity must carry weight 1, got {}",
                self.weight
            )));
        }
        if self.dose == 0 {
            return Err(Error::InvalidObservation("dose levels are 1-based".into()));
        }
        Ok(())
    }
}

/// `p_k ^ exp(beta)`.
pub fn prob_tox(skeleton: &Skeleton, dose: usize, beta: f64) -> f64 {
    skeleton.prob(dose).powf(beta.exp())
}

/// Linear TITE weight: full weight once a DLT is seen, otherwise the fraction
/// of the window already observed.
pub fn weight_of(followup: f64, window: f64, had_dlt: bool) -> Result<f64> {
    if followup < 0.0 || followup.is_nan() {
        return Err(Error::InvalidObservation(format!("negative follow-up {followup}")));
    }
    if had_dlt {
        return Ok(1.0);
    }
    Ok((followup / window).min(1.0))
}

/// `sum_i y_i ln(w_i psi_i) + (1 - y_i) ln(1 - w_i psi_i)`, with `w psi` clamped
/// to `[PROB_CLAMP, 1 - PROB_CLAMP]`. Non-toxic observations of weight zero
/// contribute exactly zero.
pub fn log_weighted_likelihood(observations: &[Observation], skeleton: &Skeleton, beta: f64) -> f64 {
    let scale = beta.exp();
    observations
        .iter()
        .map(|obs| {
            if !obs.tox && obs.weight == 0.0 {
                return 0.0;
            }
            let psi = skeleton.prob(obs.dose).powf(scale);
            let wp = (obs.weight * psi).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if obs.tox {
                wp.ln()
            } else {
                (1.0 - wp).ln()
            }
        })
        .sum()
}
