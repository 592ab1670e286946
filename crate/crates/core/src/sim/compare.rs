//! Strategy-versus-strategy deltas on matched cells.

use serde::{Deserialize, Serialize};

use super::study::CellResult;
use crate::design::Strategy;
use crate::error::{Error, Result};

/// Number of combined standard errors tolerated before an ordering is flagged.
pub const ORDERING_SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub value: f64,
    /// Standard error of the difference of two independent estimates.
    pub se: f64,
}

impl Delta {
    fn between(a: f64, a_se: f64, b: f64, b_se: f64) -> Self {
        Self { value: a - b, se: (a_se * a_se + b_se * b_se).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparison {
    pub scenario_label: String,
    pub phi: f64,
    pub pcs: [f64; 3],
    pub pos: Option<[f64; 3]>,
    pub mean_added: [f64; 3],
    pub pcs_b_minus_a: Delta,
    pub pcs_c_minus_b: Delta,
    pub pos_b_minus_a: Option<Delta>,
    pub pos_c_minus_b: Option<Delta>,
    pub added_c_minus_b: Delta,
    /// `POS_C <= POS_B <= POS_A` fails beyond the tolerance.
    pub ordering_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cells: Vec<CellComparison>,
}

impl ComparisonReport {
    pub fn violations(&self) -> impl Iterator<Item = &CellComparison> {
        self.cells.iter().filter(|c| c.ordering_violated)
    }
}

/// Pairs A, B and C results for every (scenario, phi) that has B or C cells.
/// Strategy A is matched on scenario alone.
pub fn compare_strategies(results: &[CellResult]) -> Result<ComparisonReport> {
    let find = |label: &str, strategy: Strategy, phi: f64| {
        results
            .iter()
            .find(|r| r.scenario.label == label && r.strategy == strategy && (strategy == Strategy::A || r.phi == phi))
            .ok_or_else(|| Error::MissingCell(format!("{label} strategy {strategy} phi {phi}")))
    };

    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in results.iter().filter(|r| r.strategy != Strategy::A) {
        if !keys.iter().any(|(l, p)| *l == r.scenario.label && *p == r.phi) {
            keys.push((r.scenario.label.clone(), r.phi));
        }
    }

    let mut cells = Vec::with_capacity(keys.len());
    for (label, phi) in keys {
        let a = &find(&label, Strategy::A, phi)?.oc;
        let b = &find(&label, Strategy::B, phi)?.oc;
        let c = &find(&label, Strategy::C, phi)?.oc;
        let pos = match (a.pos, b.pos, c.pos) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        let pos_delta = |hi: &super::OperatingCharacteristics, lo: &super::OperatingCharacteristics| {
            Some(Delta::between(hi.pos?, hi.mc_se.pos?, lo.pos?, lo.mc_se.pos?))
        };
        let pos_b_minus_a = pos_delta(b, a);
        let pos_c_minus_b = pos_delta(c, b);
        let beyond = |d: Option<Delta>| d.is_some_and(|d| d.value > ORDERING_SE_MULTIPLIER * d.se);
        cells.push(CellComparison {
            scenario_label: label,
            phi,
            pcs: [a.pcs, b.pcs, c.pcs],
            pos,
            mean_added: [a.mean_added, b.mean_added, c.mean_added],
            pcs_b_minus_a: Delta::between(b.pcs, b.mc_se.pcs, a.pcs, a.mc_se.pcs),
            pcs_c_minus_b: Delta::between(c.pcs, c.mc_se.pcs, b.pcs, b.mc_se.pcs),
            pos_b_minus_a,
            pos_c_minus_b,
            added_c_minus_b: Delta::between(
                c.mean_added,
                c.mc_se.mean_added,
                b.mean_added,
                b.mc_se.mean_added,
            ),
            ordering_violated: beyond(pos_b_minus_a) || beyond(pos_c_minus_b),
        });
    }
    Ok(ComparisonReport { cells })
}
