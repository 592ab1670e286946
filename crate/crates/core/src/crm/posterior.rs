//! Posterior mean of the model parameter under a normal prior.
//!
//! The likelihood is evaluated on a fixed Gauss-Hermite grid scaled to the
//! prior. Per-node tables of `ln psi` and `ln(1 - psi)` let complete
//! observations be summed by dose; only partially weighted ones need a
//! logarithm per node.

use serde::{Deserialize, Serialize};

use super::model::{Observation, PROB_CLAMP};
use super::quadrature::{GaussHermite, DEFAULT_NODES};
use super::skeleton::{closest_to, Skeleton};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PosteriorModel {
    skeleton: Skeleton,
    prior_sd: f64,
    /// Parameter value at each node.
    betas: Vec<f64>,
    /// Gauss-Hermite weights (the prior density is folded in).
    weights: Vec<f64>,
    /// Unclamped `psi` per node and dose, node-major.
    psi: Vec<f64>,
    ln_psi: Vec<f64>,
    ln_one_minus_psi: Vec<f64>,
}

/// Point estimate of the dose-toxicity curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub beta_mean: f64,
    /// Plug-in DLT probabilities `p_k ^ exp(beta_mean)`.
    pub p_hat: Vec<f64>,
}

impl Estimate {
    /// 1-based dose whose estimate is closest to `target`, ties to the lower dose.
    pub fn closest_dose(&self, target: f64) -> usize {
        closest_to(&self.p_hat, target)
    }
}

impl PosteriorModel {
    pub fn new(skeleton: Skeleton, prior_sd: f64) -> Result<Self> {
        Self::with_nodes(skeleton, prior_sd, DEFAULT_NODES)
    }

    pub fn with_nodes(skeleton: Skeleton, prior_sd: f64, nodes: usize) -> Result<Self> {
        if !(prior_sd > 0.0 && prior_sd.is_finite()) {
            return Err(Error::InvalidDesign(format!("prior_sd {prior_sd} must be positive")));
        }
        let rule = GaussHermite::new(nodes);
        let scale = std::f64::consts::SQRT_2 * prior_sd;
        let betas: Vec<f64> = rule.nodes().iter().map(|x| scale * x).collect();
        let k = skeleton.num_doses();
        let mut psi = Vec::with_capacity(betas.len() * k);
        let mut ln_psi = Vec::with_capacity(betas.len() * k);
        let mut ln_one_minus_psi = Vec::with_capacity(betas.len() * k);
        for beta in &betas {
            let e = beta.exp();
            for p in skeleton.probs() {
                let v = p.powf(e);
                let c = v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                psi.push(v);
                ln_psi.push(c.ln());
                ln_one_minus_psi.push((1.0 - c).ln());
            }
        }
        Ok(Self {
            skeleton,
            prior_sd,
            betas,
            weights: rule.weights().to_vec(),
            psi,
            ln_psi,
            ln_one_minus_psi,
        })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn prior_sd(&self) -> f64 {
        self.prior_sd
    }

    /// Posterior mean of beta given weighted observations.
    pub fn beta_mean(&self, observations: &[Observation]) -> Result<f64> {
        let k = self.skeleton.num_doses();
        let mut tox = vec![0u32; k];
        let mut complete = vec![0u32; k];
        let mut partial: Vec<(usize, f64)> = Vec::new();
        for obs in observations {
            obs.validate()?;
            if obs.dose > k {
                return Err(Error::InvalidObservation(format!(
                    "dose {} above the {k} levels of the skeleton",
                    obs.dose
                )));
            }
            let d = obs.dose - 1;
            if obs.tox {
                tox[d] += 1;
            } else if obs.weight == 1.0 {
                complete[d] += 1;
            } else if obs.weight > 0.0 {
                partial.push((d, obs.weight));
            }
        }
        if partial.is_empty() && tox.iter().chain(&complete).all(|&n| n == 0) {
            // flat likelihood: the posterior is the prior
            return Ok(0.0);
        }

        let mut log_lik = Vec::with_capacity(self.betas.len());
        for i in 0..self.betas.len() {
            let row = i * k;
            let mut ll = 0.0;
            for d in 0..k {
                if tox[d] > 0 {
                    ll += f64::from(tox[d]) * self.ln_psi[row + d];
                }
                if complete[d] > 0 {
                    ll += f64::from(complete[d]) * self.ln_one_minus_psi[row + d];
                }
            }
            for &(d, w) in &partial {
                let wp = (w * self.psi[row + d]).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                ll += (1.0 - wp).ln();
            }
            if !ll.is_finite() {
                return Err(Error::NonFiniteIntegrand { beta: self.betas[i] });
            }
            log_lik.push(ll);
        }

        let peak = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((ll, w), beta) in log_lik.iter().zip(&self.weights).zip(&self.betas) {
            let mass = w * (ll - peak).exp();
            num += mass * beta;
            den += mass;
        }
        let mean = num / den;
        if !mean.is_finite() {
            return Err(Error::NonFiniteIntegrand { beta: mean });
        }
        Ok(mean)
    }

    pub fn estimate(&self, observations: &[Observation]) -> Result<Estimate> {
        let beta_mean = self.beta_mean(observations)?;
        let scale = beta_mean.exp();
        let p_hat = self.skeleton.probs().iter().map(|p| p.powf(scale)).collect();
        Ok(Estimate { beta_mean, p_hat })
    }
}

/// Convenience wrapper building a [`PosteriorModel`] for a single evaluation.
pub fn posterior_beta_mean(observations: &[Observation], skeleton: &Skeleton, prior_sd: f64) -> Result<f64> {
    PosteriorModel::new(skeleton.clone(), prior_sd)?.beta_mean(observations)
}
