//! Skeleton construction by indifference-interval calibration.
//!
//! Under the empirical model `psi(k, b) = p_k^exp(b)`, dose `k` is the MTD
//! whenever `psi(k, b)` lies in `[target - delta, target + delta]`. The
//! skeleton is spaced so that the indifference intervals of adjacent doses
//! touch: the `b` that maps `p_k` to `target - delta` also maps `p_{k+1}` to
//! `target + delta`. Anchoring `p_nu = target` fixes the whole vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    probs: Vec<f64>,
    target: f64,
    halfwidth: Option<f64>,
    prior_mtd: usize,
}

impl Skeleton {
    /// Builds the calibrated skeleton for `num_doses` levels anchored at
    /// `prior_mtd` (1-based).
    pub fn build(target: f64, halfwidth: f64, prior_mtd: usize, num_doses: usize) -> Result<Self> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidDesign(format!("target {target} outside (0, 1)")));
        }
        let max_delta = target.min(1.0 - target);
        if !(halfwidth > 0.0 && halfwidth < max_delta) {
            return Err(Error::InvalidDesign(format!(
                "halfwidth {halfwidth} outside (0, {max_delta})"
            )));
        }
        if num_doses == 0 || prior_mtd == 0 || prior_mtd > num_doses {
            return Err(Error::InvalidDesign(format!(
                "prior_mtd {prior_mtd} outside 1..={num_doses}"
            )));
        }

        let ln_lo = (target - halfwidth).ln();
        let ln_hi = (target + halfwidth).ln();
        let mut probs = vec![0.0; num_doses];
        let anchor = prior_mtd - 1;
        probs[anchor] = target;
        for k in anchor + 1..num_doses {
            probs[k] = (ln_hi * probs[k - 1].ln() / ln_lo).exp();
        }
        for k in (0..anchor).rev() {
            probs[k] = (ln_lo * probs[k + 1].ln() / ln_hi).exp();
        }

        if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::InvalidDesign(format!(
                "skeleton not representable in double precision: {probs:?}"
            )));
        }
        assert!(
            probs.windows(2).all(|w| w[0] < w[1]),
            "skeleton not strictly increasing: {probs:?}"
        );
        Ok(Self { probs, target, halfwidth: Some(halfwidth), prior_mtd })
    }

    /// Wraps an explicit skeleton, e.g. one supplied by an investigator.
    pub fn from_probs(probs: Vec<f64>, target: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDesign("empty skeleton".into()));
        }
        if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::InvalidDesign(format!("skeleton values must lie in (0, 1): {probs:?}")));
        }
        if !probs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidDesign(format!("skeleton must be strictly increasing: {probs:?}")));
        }
        let prior_mtd = closest_to(&probs, target);
        Ok(Self { probs, target, halfwidth: None, prior_mtd })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_doses(&self) -> usize {
        self.probs.len()
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// `None` for skeletons supplied with [`Skeleton::from_probs`].
    pub fn halfwidth(&self) -> Option<f64> {
        self.halfwidth
    }

    pub fn prior_mtd(&self) -> usize {
        self.prior_mtd
    }

    /// Prior guess at dose `k` (1-based).
    pub fn prob(&self, dose: usize) -> f64 {
        self.probs[dose - 1]
    }
}

/// 1-based index of the value closest to `target`, ties to the lower dose.
pub(crate) fn closest_to(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        let gap = (v - target).abs();
        if gap < best_gap {
            best = i;
            best_gap = gap;
        }
    }
    best + 1
}
