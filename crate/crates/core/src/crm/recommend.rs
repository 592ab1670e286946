use super::model::Observation;
use super::posterior::PosteriorModel;
use crate::design::DesignConfig;
use crate::error::Result;

/// Dose for the next patient (`escalating = true`) or the final MTD
/// (`escalating = false`).
///
/// `highest_tried` is the highest dose given so far, 0 when nobody has been
/// enrolled; the first patient always gets `design.start_dose`. While
/// escalating the recommendation is capped one level above `highest_tried`.
pub fn recommend_dose(
    model: &PosteriorModel,
    observations: &[Observation],
    design: &DesignConfig,
    highest_tried: usize,
    escalating: bool,
) -> Result<usize> {
    if escalating && highest_tried == 0 {
        return Ok(design.start_dose);
    }
    let best = model.estimate(observations)?.closest_dose(design.target);
    Ok(if escalating { best.min(highest_tried + 1) } else { best })
}
