//! CSV output of study results.
//!
//! Summary columns, in order:
//! `scenario_label,tox_row,prog_row,strategy,phi,N,PCS,POS,mean_added,pct_added,mean_duration,mc_se_pcs`.
//! POS is `NA` when the true MTD is the top dose. Row indices are empty for
//! scenarios outside the built-in library.
//!
//! Selection columns: `scenario_label,strategy,phi,N,dose,pct_selected`.
//!
//! Comparison columns: see [`COMPARISON_HEADER`]; each delta is followed by
//! its standard error, empty where POS is undefined.

use std::fmt::Write as _;

use super::compare::{ComparisonReport, Delta};
use super::study::CellResult;

pub const SUMMARY_HEADER: &str =
    "scenario_label,tox_row,prog_row,strategy,phi,N,PCS,POS,mean_added,pct_added,mean_duration,mc_se_pcs";

pub const SELECTION_HEADER: &str = "scenario_label,strategy,phi,N,dose,pct_selected";

fn opt_index(i: Option<usize>) -> String {
    i.map(|v| v.to_string()).unwrap_or_default()
}

fn quote(label: &str) -> String {
    if label.contains([',', '"', '\n']) {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

pub const COMPARISON_HEADER: &str = "scenario_label,phi,pcs_b_minus_a,se,pcs_c_minus_b,se,pos_b_minus_a,se,pos_c_minus_b,se,added_c_minus_b,se,ordering_violated";

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        let pos = r.oc.pos.map(|p| format!("{p:.2}")).unwrap_or_else(|| "NA".into());
        let _ = writeln!(
            out,
            "{},{},{},{},{:.2},{},{:.2},{},{:.3},{:.1},{:.2},{:.3}",
            quote(&r.scenario.label),
            opt_index(r.scenario.tox_row),
            opt_index(r.scenario.prog_row),
            r.strategy,
            r.phi,
            r.sample_size,
            r.oc.pcs,
            pos,
            r.oc.mean_added,
            r.oc.pct_added,
            r.oc.mean_duration,
            r.oc.mc_se.pcs,
        );
    }
    out
}

pub fn selection_csv(results: &[CellResult]) -> String {
    let mut out = String::new();
    out.push_str(SELECTION_HEADER);
    out.push('\n');
    for r in results {
        for (i, pct) in r.oc.selection_dist.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{:.2},{},{},{:.2}",
                quote(&r.scenario.label),
                r.strategy,
                r.phi,
                r.sample_size,
                i + 1,
                pct
            );
        }
    }
    out
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let delta = |d: Delta| format!("{:.2},{:.2}", d.value, d.se);
    let opt = |d: Option<Delta>| d.map(delta).unwrap_or_else(|| ",".into());
    let mut out = String::new();
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{:.2},{},{},{},{},{:.3},{:.3},{}",
            quote(&c.scenario_label),
            c.phi,
            delta(c.pcs_b_minus_a),
            delta(c.pcs_c_minus_b),
            opt(c.pos_b_minus_a),
            opt(c.pos_c_minus_b),
            c.added_c_minus_b.value,
            c.added_c_minus_b.se,
            c.ordering_violated,
        );
    }
    out
}
