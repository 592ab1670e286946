//! TOML study files.
//!
//! ```toml
//! label = "n24-phi050"
//! replicates = 10000
//! base_seed = 20190601
//! strategies = ["A", "B", "C"]
//! phis = [0.5]
//! time_grid = "weekly"
//! library = true                  # the built-in 5 x 11 grid
//! library_labels = ["mtd3-const60"]  # optional subset of the grid
//!
//! [design]
//! num_doses = 5
//! # ... every DesignConfig field
//!
//! [[scenarios]]                   # extra scenarios, appended after the library
//! label = "custom"
//! tox_probs = [0.05, 0.10, 0.25, 0.40, 0.55]
//! prog_probs = [0.5, 0.5, 0.5, 0.5, 0.5]
//! ```

use serde::{Deserialize, Serialize};

use crate::design::{DesignConfig, Strategy};
use crate::error::{Error, Result};
use crate::scenario::{scenario_library, ScenarioSpec};
use crate::sim::{StudyConfig, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub label: String,
    pub replicates: usize,
    pub base_seed: u64,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub phis: Vec<f64>,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub library: bool,
    #[serde(default)]
    pub library_labels: Option<Vec<String>>,
    pub design: DesignConfig,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSpec>,
}

impl StudyFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Expands library selections into a validated [`StudyConfig`].
    pub fn resolve(&self) -> Result<StudyConfig> {
        let mut scenarios = Vec::new();
        if self.library {
            let lib = scenario_library();
            match &self.library_labels {
                None => scenarios.extend(lib),
                Some(labels) => {
                    for label in labels {
                        let s = lib
                            .iter()
                            .find(|s| &s.label == label)
                            .ok_or_else(|| Error::InvalidConfig(format!("unknown library scenario {label:?}")))?;
                        scenarios.push(s.clone());
                    }
                }
            }
        }
        scenarios.extend(self.scenarios.iter().cloned());
        let config = StudyConfig {
            label: self.label.clone(),
            design: self.design.clone(),
            strategies: self.strategies.clone(),
            phis: self.phis.clone(),
            scenarios,
            replicates: self.replicates,
            base_seed: self.base_seed,
            time_grid: self.time_grid,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
label = "t"
replicates = 5
base_seed = 1
strategies = ["A", "C"]
phis = [0.5, 0.75]
time_grid = "weekly"
library = true
library_labels = ["mtd3-const60", "mtd1-const00"]

[design]
num_doses = 5
target = 0.25
window = 8.0
sample_size = 24
phi = 0.5
start_dose = 1
prior_sd = 1.1575836902790226
halfwidth = 0.1
prior_mtd = 3
accrual_interval = 4.0

[[scenarios]]
label = "custom"
tox_probs = [0.05, 0.10, 0.25, 0.40, 0.55]
prog_probs = [0.5, 0.5, 0.5, 0.5, 0.5]
"#;

    #[test]
    fn parses_and_resolves() {
        let f = StudyFile::from_toml(SAMPLE).unwrap();
        let c = f.resolve().unwrap();
        assert_eq!(c.scenarios.len(), 3);
        assert_eq!(c.scenarios[0].label, "mtd3-const60");
        assert_eq!(c.scenarios[2].tox_row, None);
        assert_eq!(c.time_grid, TimeGrid::Weekly);
        assert_eq!(c.cells().len(), 3 * 3);
    }

    #[test]
    fn unknown_keys_and_labels_rejected() {
        assert!(StudyFile::from_toml(&SAMPLE.replace("base_seed", "seed")).is_err());
        let f = StudyFile::from_toml(&SAMPLE.replace("mtd1-const00", "nope")).unwrap();
        assert!(f.resolve().is_err());
    }

    #[test]
    fn invalid_design_rejected() {
        let f = StudyFile::from_toml(&SAMPLE.replace("target = 0.25", "target = 1.2")).unwrap();
        assert!(f.resolve().is_err());
    }
}
