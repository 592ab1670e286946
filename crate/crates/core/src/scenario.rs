//! Latent outcome generation and the built-in scenario grid.
//!
//! Each event is present with its marginal probability by the end of the
//! window and, when present, occurs uniformly on `(0, T]`. Toxicity and
//! progression are drawn independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crm::skeleton::closest_to;
use crate::error::{Error, Result};

/// DLT probabilities by the end of the window, one row per true MTD location
/// (MTD at dose 5 down to dose 1).
pub const TOXICITY_ROWS: [[f64; 5]; 5] = [
    [0.00, 0.01, 0.05, 0.10, 0.25],
    [0.01, 0.05, 0.10, 0.25, 0.40],
    [0.05, 0.10, 0.25, 0.40, 0.55],
    [0.10, 0.25, 0.40, 0.55, 0.65],
    [0.25, 0.40, 0.55, 0.65, 0.70],
];

/// Progression probabilities by the end of the window.
pub const PROGRESSION_ROWS: [(&str, [f64; 5]); 11] = [
    ("const00", [0.0, 0.0, 0.0, 0.0, 0.0]),
    ("const20", [0.2, 0.2, 0.2, 0.2, 0.2]),
    ("const40", [0.4, 0.4, 0.4, 0.4, 0.4]),
    ("const60", [0.6, 0.6, 0.6, 0.6, 0.6]),
    ("const80", [0.8, 0.8, 0.8, 0.8, 0.8]),
    ("decreasing", [0.6, 0.5, 0.4, 0.3, 0.2]),
    ("plateau2", [0.6, 0.4, 0.4, 0.4, 0.4]),
    ("plateau3", [0.6, 0.6, 0.4, 0.4, 0.4]),
    ("plateau4", [0.6, 0.6, 0.6, 0.4, 0.4]),
    ("plateau5", [0.6, 0.6, 0.6, 0.6, 0.4]),
    ("ushaped", [0.6, 0.5, 0.4, 0.5, 0.6]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub label: String,
    pub tox_probs: Vec<f64>,
    pub prog_probs: Vec<f64>,
    /// 1-based index into [`TOXICITY_ROWS`] for library scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tox_row: Option<usize>,
    /// 1-based index into [`PROGRESSION_ROWS`] for library scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prog_row: Option<usize>,
}

impl ScenarioSpec {
    pub fn new(label: impl Into<String>, tox_probs: Vec<f64>, prog_probs: Vec<f64>) -> Result<Self> {
        let s = Self { label: label.into(), tox_probs, prog_probs, tox_row: None, prog_row: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tox_probs.is_empty() || self.tox_probs.len() != self.prog_probs.len() {
            return Err(Error::InvalidScenario(format!(
                "{}: need equal, non-empty tox_probs and prog_probs",
                self.label
            )));
        }
        let all = self.tox_probs.iter().chain(&self.prog_probs);
        if all.clone().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidScenario(format!("{}: probabilities must lie in [0, 1]", self.label)));
        }
        Ok(())
    }

    pub fn num_doses(&self) -> usize {
        self.tox_probs.len()
    }

    /// Dose whose true DLT probability is closest to `target` (ties to the lower dose).
    pub fn true_mtd(&self, target: f64) -> usize {
        closest_to(&self.tox_probs, target)
    }

    pub fn has_progression(&self) -> bool {
        self.prog_probs.iter().any(|p| *p > 0.0)
    }
}

/// The 5 x 11 scenario grid, ordered by toxicity row then progression row.
pub fn scenario_library() -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(TOXICITY_ROWS.len() * PROGRESSION_ROWS.len());
    for (ti, tox) in TOXICITY_ROWS.iter().enumerate() {
        let mtd = closest_to(tox, 0.25);
        for (pi, (name, prog)) in PROGRESSION_ROWS.iter().enumerate() {
            out.push(ScenarioSpec {
                label: format!("mtd{mtd}-{name}"),
                tox_probs: tox.to_vec(),
                prog_probs: prog.to_vec(),
                tox_row: Some(ti + 1),
                prog_row: Some(pi + 1),
            });
        }
    }
    out
}

/// Looks up a library scenario by label.
pub fn library_scenario(label: &str) -> Option<ScenarioSpec> {
    scenario_library().into_iter().find(|s| s.label == label)
}

/// Event times measured from enrollment; `None` when the event does not occur
/// within the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentOutcome {
    pub tox_time: Option<f64>,
    pub prog_time: Option<f64>,
}

/// What the trial engine ends up observing for a patient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedOutcome {
    Dlt(f64),
    Progression(f64),
    Complete,
}

impl LatentOutcome {
    /// First event within the window. Toxicity wins ties; progression exactly
    /// at the window end counts as a complete follow-up.
    pub fn observed(&self, window: f64) -> ObservedOutcome {
        match (self.tox_time, self.prog_time) {
            (Some(u), p) if u <= window && p.map_or(true, |p| u <= p) => ObservedOutcome::Dlt(u),
            (_, Some(p)) if p < window => ObservedOutcome::Progression(p),
            _ => ObservedOutcome::Complete,
        }
    }

    /// Rounds event times up to whole weeks, as with weekly assessments.
    pub fn rounded_up(&self, window: f64) -> Self {
        let round = |t: f64| t.ceil().min(window);
        Self { tox_time: self.tox_time.map(round), prog_time: self.prog_time.map(round) }
    }
}

/// Draws one patient's latent outcome at `dose` (1-based).
///
/// Always consumes four uniforms, so that a patient's stream yields coupled
/// outcomes whatever dose it is given.
pub fn draw_outcome<R: Rng + ?Sized>(scenario: &ScenarioSpec, dose: usize, window: f64, rng: &mut R) -> LatentOutcome {
    let u_tox: f64 = rng.gen();
    let t_tox: f64 = rng.gen();
    let u_prog: f64 = rng.gen();
    let t_prog: f64 = rng.gen();
    let tox = scenario.tox_probs[dose - 1];
    let prog = scenario.prog_probs[dose - 1];
    // gen() is on [0, 1), so window * (1 - u) is on (0, window]
    LatentOutcome {
        tox_time: (u_tox < tox).then(|| window * (1.0 - t_tox)),
        prog_time: (u_prog < prog).then(|| window * (1.0 - t_prog)),
    }
}

/// Deterministic per-patient stream keyed by (seed, replicate, patient).
pub fn patient_rng(base_seed: u64, replicate: u64, patient_id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(base_seed, replicate));
    rng.set_stream(u64::from(patient_id));
    rng
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scen(tox: f64, prog: f64) -> ScenarioSpec {
        ScenarioSpec::new("t", vec![tox], vec![prog]).unwrap()
    }

    #[test]
    fn library_shape() {
        let lib = scenario_library();
        assert_eq!(lib.len(), 55);
        let row3 = &lib[2 * 11];
        assert_eq!(row3.tox_probs, vec![0.05, 0.10, 0.25, 0.40, 0.55]);
        assert_eq!(row3.true_mtd(0.25), 3);
        let u = lib.iter().find(|s| s.label == "mtd3-ushaped").unwrap();
        assert_eq!(u.prog_probs, vec![0.6, 0.5, 0.4, 0.5, 0.6]);
        let mtds: Vec<usize> = lib.iter().step_by(11).map(|s| s.true_mtd(0.25)).collect();
        assert_eq!(mtds, vec![5, 4, 3, 2, 1]);
        let mut labels: Vec<&str> = lib.iter().map(|s| s.label.as_str()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 55);
    }

    #[test]
    fn no_events_when_probabilities_zero() {
        let s = scen(0.0, 0.0);
        let mut rng = patient_rng(1, 0, 1);
        for _ in 0..1000 {
            let o = draw_outcome(&s, 1, 8.0, &mut rng);
            assert_eq!(o, LatentOutcome { tox_time: None, prog_time: None });
        }
    }

    #[test]
    fn certain_toxicity_is_uniform_on_window() {
        let s = scen(1.0, 0.0);
        let mut rng = patient_rng(7, 0, 1);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let t = draw_outcome(&s, 1, 8.0, &mut rng).tox_time.unwrap();
            assert!(t > 0.0 && t <= 8.0);
            sum += t;
        }
        assert!((sum / n as f64 - 4.0).abs() < 0.01);
    }

    #[test]
    fn early_unevaluable_frequency_matches_integral() {
        // q * int_0^phi (1 - r t) dt with q = 0.6, r = 0.25, phi = 0.5
        let expected = 0.6 * (0.5 - 0.25 * 0.25 / 2.0);
        assert!((expected - 0.28125f64).abs() < 1e-15);
        let s = scen(0.25, 0.6);
        let mut rng = patient_rng(11, 0, 1);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                matches!(draw_outcome(&s, 1, 8.0, &mut rng).observed(8.0), ObservedOutcome::Progression(p) if p < 4.0)
            })
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - expected).abs() < 0.002, "{freq}");
    }

    #[test]
    fn marginals_and_independence() {
        let s = ScenarioSpec::new("m", vec![0.1, 0.4], vec![0.6, 0.2]).unwrap();
        let n = 200_000;
        for dose in 1..=2 {
            let mut rng = patient_rng(3, dose as u64, 1);
            let (mut t, mut p, mut both) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let o = draw_outcome(&s, dose, 8.0, &mut rng);
                let (a, b) = (o.tox_time.is_some() as u8 as f64, o.prog_time.is_some() as u8 as f64);
                t += a;
                p += b;
                both += a * b;
            }
            let nf = n as f64;
            let (qt, qp) = (s.tox_probs[dose - 1], s.prog_probs[dose - 1]);
            assert!((t / nf - qt).abs() < 3.0 * (qt * (1.0 - qt) / nf).sqrt());
            assert!((p / nf - qp).abs() < 3.0 * (qp * (1.0 - qp) / nf).sqrt());
            let cov = both / nf - (t / nf) * (p / nf);
            let se = (qt * (1.0 - qt) * qp * (1.0 - qp) / nf).sqrt();
            assert!(cov.abs() < 3.0 * se, "cov {cov} se {se}");
        }
    }

    #[test]
    fn observed_outcome_rules() {
        let o = LatentOutcome { tox_time: Some(3.0), prog_time: Some(3.0) };
        assert_eq!(o.observed(8.0), ObservedOutcome::Dlt(3.0));
        let o = LatentOutcome { tox_time: Some(5.0), prog_time: Some(2.0) };
        assert_eq!(o.observed(8.0), ObservedOutcome::Progression(2.0));
        let o = LatentOutcome { tox_time: None, prog_time: Some(8.0) };
        assert_eq!(o.observed(8.0), ObservedOutcome::Complete);
        let o = LatentOutcome { tox_time: Some(0.2), prog_time: Some(7.1) }.rounded_up(8.0);
        assert_eq!(o, LatentOutcome { tox_time: Some(1.0), prog_time: Some(8.0) });
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let s = scen(0.5, 0.5);
        let a: Vec<_> = (0..10).map(|_| draw_outcome(&s, 1, 8.0, &mut patient_rng(5, 2, 3))).collect();
        let b: Vec<_> = (0..10).map(|_| draw_outcome(&s, 1, 8.0, &mut patient_rng(5, 2, 3))).collect();
        assert_eq!(a, b);
        let x: f64 = patient_rng(5, 2, 3).gen();
        let y: f64 = patient_rng(5, 2, 4).gen();
        let z: f64 = patient_rng(5, 3, 3).gen();
        assert!(x != y && x != z);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        assert!(ScenarioSpec::new("x", vec![0.1, 1.2], vec![0.0, 0.0]).is_err());
        assert!(ScenarioSpec::new("x", vec![0.1], vec![0.0, 0.0]).is_err());
    }
}
