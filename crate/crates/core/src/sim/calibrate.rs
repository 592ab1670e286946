//! Grid search over the indifference-interval half-width.

use serde::{Deserialize, Serialize};

use super::study::{design_model, run_cell, CellKey, StudyConfig};
use crate::design::{DesignConfig, Strategy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfwidthScore {
    pub halfwidth: f64,
    /// PCS averaged over the config's scenarios.
    pub mean_pcs: f64,
}

/// Scores each candidate half-width by the average PCS of `strategy` over the
/// scenarios of `config` (using its first phi for B and C). Invalid
/// candidates are skipped. Returns scores in candidate order and the best one
/// (first on ties).
pub fn calibrate_halfwidth(
    config: &StudyConfig,
    candidates: &[f64],
    strategy: Strategy,
) -> Result<(Vec<HalfwidthScore>, HalfwidthScore)> {
    let phi = if strategy == Strategy::A { 0.0 } else { config.phis.first().copied().unwrap_or(config.design.phi) };
    let mut scores = Vec::new();
    for &halfwidth in candidates {
        let design = DesignConfig { halfwidth, ..config.design.clone() };
        if design.validate().is_err() {
            continue;
        }
        let cfg = StudyConfig { design, ..config.clone() };
        cfg.validate()?;
        let model = design_model(&cfg.design)?;
        let mut total = 0.0;
        for scenario in 0..cfg.scenarios.len() {
            total += run_cell(&cfg, CellKey { scenario, strategy, phi }, &model)?.oc.pcs;
        }
        scores.push(HalfwidthScore { halfwidth, mean_pcs: total / cfg.scenarios.len() as f64 });
    }
    let best = scores
        .iter()
        .copied()
        .fold(None, |best: Option<HalfwidthScore>, s| match best {
            Some(b) if b.mean_pcs >= s.mean_pcs => Some(b),
            _ => Some(s),
        })
        .ok_or_else(|| Error::InvalidConfig("no valid half-width candidates".into()))?;
    Ok((scores, best))
}
