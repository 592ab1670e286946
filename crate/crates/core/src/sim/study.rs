//! Replicate runner and operating-characteristics aggregation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replicate::{run_replicate, ReplicateSeed, TimeGrid};
use crate::crm::{PosteriorModel, Skeleton};
use crate::design::{DesignConfig, Strategy};
use crate::engine::TrialSummary;
use crate::error::{Error, Result};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub label: String,
    pub design: DesignConfig,
    pub strategies: Vec<Strategy>,
    /// Thresholds for strategies B and C; strategy A always runs once with 0.
    pub phis: Vec<f64>,
    pub scenarios: Vec<ScenarioSpec>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub time_grid: TimeGrid,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies selected".into()));
        }
        if self.strategies.iter().any(|s| *s != Strategy::A) && self.phis.is_empty() {
            return Err(Error::InvalidConfig("strategies B and C need at least one phi".into()));
        }
        if let Some(phi) = self.phis.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidConfig(format!("phi {phi} outside [0, 1]")));
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidConfig("no scenarios".into()));
        }
        for s in &self.scenarios {
            s.validate()?;
            if s.num_doses() != self.design.num_doses {
                return Err(Error::InvalidScenario(format!(
                    "{} has {} doses, design has {}",
                    s.label,
                    s.num_doses(),
                    self.design.num_doses
                )));
            }
        }
        Ok(())
    }

    /// Cells in output order: scenario, then strategy, then phi.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut strategies = self.strategies.clone();
        strategies.sort();
        strategies.dedup();
        let mut out = Vec::new();
        for scenario in 0..self.scenarios.len() {
            for &strategy in &strategies {
                if strategy == Strategy::A {
                    out.push(CellKey { scenario, strategy, phi: 0.0 });
                } else {
                    for &phi in &self.phis {
                        out.push(CellKey { scenario, strategy, phi });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    /// Index into `StudyConfig::scenarios`.
    pub scenario: usize,
    pub strategy: Strategy,
    pub phi: f64,
}

/// Monte Carlo standard errors, in the units of the matching estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McErrors {
    pub pcs: f64,
    pub pos: Option<f64>,
    pub mean_added: f64,
    pub mean_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub replicates: usize,
    pub true_mtd: usize,
    /// Percent of trials selecting the true MTD.
    pub pcs: f64,
    /// Percent selecting a dose above the true MTD; `None` when it is the top dose.
    pub pos: Option<f64>,
    pub mean_added: f64,
    /// `mean_added` as a percent of the planned sample size.
    pub pct_added: f64,
    pub mean_duration: f64,
    /// Percent of trials selecting each dose.
    pub selection_dist: Vec<f64>,
    pub mc_se: McErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: ScenarioSpec,
    pub strategy: Strategy,
    pub phi: f64,
    pub sample_size: usize,
    pub oc: OperatingCharacteristics,
}

/// Per-replicate quantities needed for aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub selected_dose: usize,
    pub added_patients: usize,
    pub duration: f64,
}

impl From<&TrialSummary> for ReplicateOutcome {
    fn from(s: &TrialSummary) -> Self {
        Self { selected_dose: s.selected_dose, added_patients: s.added_patients, duration: s.duration }
    }
}

/// Commutative accumulator over replicate outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    selections: Vec<u64>,
    added: u64,
    added_sq: u64,
    duration: f64,
    duration_sq: f64,
}

impl Accumulator {
    pub fn new(num_doses: usize) -> Self {
        Self { selections: vec![0; num_doses], ..Default::default() }
    }

    pub fn push(&mut self, r: &ReplicateOutcome) {
        self.n += 1;
        self.selections[r.selected_dose - 1] += 1;
        let a = r.added_patients as u64;
        self.added += a;
        self.added_sq += a * a;
        self.duration += r.duration;
        self.duration_sq += r.duration * r.duration;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        for (a, b) in self.selections.iter_mut().zip(&other.selections) {
            *a += b;
        }
        self.added += other.added;
        self.added_sq += other.added_sq;
        self.duration += other.duration;
        self.duration_sq += other.duration_sq;
    }

    pub fn finish(&self, true_mtd: usize, sample_size: usize) -> OperatingCharacteristics {
        let n = self.n as f64;
        let pct = |c: u64| 100.0 * c as f64 / n;
        let pct_se = |c: u64| {
            let p = c as f64 / n;
            100.0 * (p * (1.0 - p) / n).sqrt()
        };
        let k = self.selections.len();
        let correct = self.selections[true_mtd - 1];
        let over: Option<u64> = (true_mtd < k).then(|| self.selections[true_mtd..].iter().sum());
        let mean_added = self.added as f64 / n;
        let var_added = (self.added_sq as f64 / n - mean_added * mean_added).max(0.0);
        let mean_duration = self.duration / n;
        let var_duration = (self.duration_sq / n - mean_duration * mean_duration).max(0.0);
        OperatingCharacteristics {
            replicates: self.n as usize,
            true_mtd,
            pcs: pct(correct),
            pos: over.map(pct),
            mean_added,
            pct_added: 100.0 * mean_added / sample_size as f64,
            mean_duration,
            selection_dist: self.selections.iter().map(|c| pct(*c)).collect(),
            mc_se: McErrors {
                pcs: pct_se(correct),
                pos: over.map(pct_se),
                mean_added: (var_added / n).sqrt(),
                mean_duration: (var_duration / n).sqrt(),
            },
        }
    }
}

/// Builds the shared posterior model of a design.
pub fn design_model(design: &DesignConfig) -> Result<Arc<PosteriorModel>> {
    let skeleton = Skeleton::build(design.target, design.halfwidth, design.prior_mtd, design.num_doses)?;
    Ok(Arc::new(PosteriorModel::new(skeleton, design.prior_sd)?))
}

/// Runs every replicate of one cell. Replicates run in parallel; results come
/// back in replicate order.
pub fn run_cell_outcomes(config: &StudyConfig, key: CellKey, model: &Arc<PosteriorModel>) -> Result<Vec<ReplicateOutcome>> {
    let design = DesignConfig { phi: key.phi, ..config.design.clone() };
    let scenario = &config.scenarios[key.scenario];
    (0..config.replicates as u64)
        .into_par_iter()
        .map(|replicate| {
            let seed = ReplicateSeed { base_seed: config.base_seed, replicate };
            run_replicate(&design, model, scenario, key.strategy, seed, config.time_grid).map(|s| ReplicateOutcome::from(&s))
        })
        .collect()
}

pub fn run_cell(config: &StudyConfig, key: CellKey, model: &Arc<PosteriorModel>) -> Result<CellResult> {
    let outcomes = run_cell_outcomes(config, key, model)?;
    let mut acc = Accumulator::new(config.design.num_doses);
    for o in &outcomes {
        acc.push(o);
    }
    let scenario = config.scenarios[key.scenario].clone();
    let true_mtd = scenario.true_mtd(config.design.target);
    Ok(CellResult {
        scenario,
        strategy: key.strategy,
        phi: key.phi,
        sample_size: config.design.sample_size,
        oc: acc.finish(true_mtd, config.design.sample_size),
    })
}

/// Runs the full grid of cells. Output is sorted by scenario, strategy, phi.
pub fn run_study(config: &StudyConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    let model = design_model(&config.design)?;
    config.cells().into_iter().map(|key| run_cell(config, key, &model)).collect()
}
