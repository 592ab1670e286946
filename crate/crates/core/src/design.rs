//! Trial design parameters and progression-handling strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default prior variance of the model parameter (normal prior, mean zero).
pub const DEFAULT_PRIOR_VARIANCE: f64 = 1.34;

/// Static design of a TITE-CRM trial.
///
/// Dose levels are 1-based throughout the crate: dose `k` refers to
/// `skeleton.probs()[k - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub num_doses: usize,
    /// Target DLT probability.
    pub target: f64,
    /// Toxicity observation window, in weeks.
    pub window: f64,
    /// Number of evaluable patients.
    pub sample_size: usize,
    /// Evaluability threshold as a fraction of the window.
    pub phi: f64,
    pub start_dose: usize,
    pub prior_sd: f64,
    /// Half-width of the indifference interval used to build the skeleton.
    pub halfwidth: f64,
    /// Dose level at which the skeleton equals the target.
    pub prior_mtd: usize,
    /// Weeks between consecutive arrivals.
    pub accrual_interval: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            num_doses: 5,
            target: 0.25,
            window: 8.0,
            sample_size: 24,
            phi: 0.5,
            start_dose: 1,
            prior_sd: DEFAULT_PRIOR_VARIANCE.sqrt(),
            halfwidth: 0.10,
            prior_mtd: 3,
            accrual_interval: 4.0,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDesign(msg));
        if self.num_doses < 1 {
            return bad("num_doses must be at least 1".into());
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return bad(format!("target {} outside (0, 1)", self.target));
        }
        if !(self.phi >= 0.0 && self.phi <= 1.0) {
            return bad(format!("phi {} outside [0, 1]", self.phi));
        }
        let max_delta = self.target.min(1.0 - self.target);
        if !(self.halfwidth > 0.0 && self.halfwidth < max_delta) {
            return bad(format!(
                "halfwidth {} outside (0, {})",
                self.halfwidth, max_delta
            ));
        }
        if self.prior_mtd < 1 || self.prior_mtd > self.num_doses {
            return bad(format!("prior_mtd {} outside 1..={}", self.prior_mtd, self.num_doses));
        }
        if self.start_dose < 1 || self.start_dose > self.num_doses {
            return bad(format!("start_dose {} outside 1..={}", self.start_dose, self.num_doses));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad(format!("window {} must be positive", self.window));
        }
        if self.sample_size < 1 {
            return bad("sample_size must be at least 1".into());
        }
        if !(self.prior_sd > 0.0 && self.prior_sd.is_finite()) {
            return bad(format!("prior_sd {} must be positive", self.prior_sd));
        }
        if !(self.accrual_interval > 0.0 && self.accrual_interval.is_finite()) {
            return bad(format!("accrual_interval {} must be positive", self.accrual_interval));
        }
        Ok(())
    }

    /// Evaluability threshold in weeks (`phi * window`).
    pub fn threshold(&self) -> f64 {
        self.phi * self.window
    }
}

/// How follow-up of patients who progress before the evaluability threshold
/// enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Every progressor is evaluable; the threshold is ignored.
    A,
    /// Early progressors are replaced; all their follow-up stays in the likelihood.
    B,
    /// Early progressors are replaced; only follow-up already used by a
    /// previous dose assignment stays in the likelihood.
    C,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::A, Strategy::B, Strategy::C];

    /// Threshold fraction actually in force under this strategy.
    pub fn effective_phi(self, phi: f64) -> f64 {
        match self {
            Strategy::A => 0.0,
            Strategy::B | Strategy::C => phi,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::A => "A",
            Strategy::B => "B",
            Strategy::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Strategy::A),
            "B" | "b" => Ok(Strategy::B),
            "C" | "c" => Ok(Strategy::C),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}
