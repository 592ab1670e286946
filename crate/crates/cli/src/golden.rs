//! Side-by-side comparison of simulated summaries with reference tables.
//!
//! Reference tables (see `tables/`) have the columns
//! `scenario_label,strategy,phi,N,PCS,POS,mean_added,pct_added`, with `NA`
//! where POS is undefined.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

fn na<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    let s = String::deserialize(d)?;
    if s.is_empty() || s == "NA" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceRow {
    pub scenario_label: String,
    pub strategy: String,
    pub phi: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "PCS")]
    pub pcs: f64,
    #[serde(rename = "POS", deserialize_with = "na")]
    pub pos: Option<f64>,
    pub mean_added: f64,
    pub pct_added: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub scenario_label: String,
    pub tox_row: String,
    pub prog_row: String,
    pub strategy: String,
    pub phi: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "PCS")]
    pub pcs: f64,
    #[serde(rename = "POS", deserialize_with = "na")]
    pub pos: Option<f64>,
    pub mean_added: f64,
    pub pct_added: f64,
    pub mean_duration: f64,
    pub mc_se_pcs: f64,
}

fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: record {}", path.display(), i + 1)))
        .collect()
}

pub fn read_summary(path: &Path) -> anyhow::Result<Vec<SummaryRow>> {
    read(path)
}

pub fn read_reference(path: &Path) -> anyhow::Result<Vec<ReferenceRow>> {
    read(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparedCell {
    pub label: String,
    pub strategy: String,
    pub phi: f64,
    pub pcs: (f64, f64),
    pub pos: (Option<f64>, Option<f64>),
    pub added: (f64, f64),
    pub mc_se_pcs: f64,
}

impl ComparedCell {
    pub fn max_abs_delta(&self) -> f64 {
        let pos = match self.pos {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        (self.pcs.0 - self.pcs.1).abs().max(pos)
    }
}

/// Matches cells on (label, strategy, phi, N), in summary order.
pub fn compare(summary: &[SummaryRow], reference: &[ReferenceRow]) -> Vec<ComparedCell> {
    summary
        .iter()
        .filter_map(|s| {
            let r = reference.iter().find(|r| {
                r.scenario_label == s.scenario_label && r.strategy == s.strategy && r.n == s.n && (r.phi - s.phi).abs() < 1e-9
            })?;
            Some(ComparedCell {
                label: s.scenario_label.clone(),
                strategy: s.strategy.clone(),
                phi: s.phi,
                pcs: (s.pcs, r.pcs),
                pos: (s.pos, r.pos),
                added: (s.mean_added, r.mean_added),
                mc_se_pcs: s.mc_se_pcs,
            })
        })
        .collect()
}

pub fn format_comparison(rows: &[ComparedCell]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "n/a".into());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>3} {:>5} {:>12} {:>12} {:>12}",
        "scenario", "st", "phi", "PCS sim/ref", "POS sim/ref", "+N sim/ref"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:>3} {:>5.2} {:>5.1}/{:<6.1} {:>5}/{:<6} {:>5.2}/{:<6.1}",
            r.label,
            r.strategy,
            r.phi,
            r.pcs.0,
            r.pcs.1,
            opt(r.pos.0),
            opt(r.pos.1),
            r.added.0,
            r.added.1
        );
    }
    out
}
