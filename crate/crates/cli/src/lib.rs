//! Implementation of the `titecrm` command line.

pub mod golden;
pub mod manifest;
pub mod presets;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use titecrm_core::config::StudyFile;
use titecrm_core::crm::Skeleton;
use titecrm_core::sim::{
    compare_strategies, comparison_csv, design_model, run_cell, selection_csv, summary_csv, CellResult, StudyConfig,
};

use manifest::{Artifact, RunManifest};

/// Failures mapped onto exit codes: usage problems exit 1, everything about
/// the data or the environment exits 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<titecrm_core::Error> for CliError {
    fn from(e: titecrm_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "titecrm", version, about = "TITE-CRM dose finding with progression-censored follow-up")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a skeleton calibrated by the indifference interval.
    Skeleton(SkeletonArgs),
    /// Run a simulation study and write CSV tables plus a manifest.
    Simulate(SimulateArgs),
    /// Re-run the study recorded in a manifest and check the outputs match.
    Reproduce(ReproduceArgs),
    /// Compare a summary CSV against a reference table.
    Compare(CompareArgs),
    /// List the bundled study presets.
    Presets,
    /// Serve the trial-conduct HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    #[arg(long)]
    pub target: f64,
    #[arg(long)]
    pub halfwidth: f64,
    /// Prior guess of the MTD (1-based), where the skeleton equals the target.
    #[arg(long)]
    pub nu: usize,
    /// Number of dose levels.
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study file (TOML). Mutually exclusive with --preset.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled preset name, see `titecrm presets`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Restrict to these scenario labels (repeatable).
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub manifest: PathBuf,
    /// Output directory; defaults to a `reproduced` directory beside the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub summary: PathBuf,
    pub reference: PathBuf,
    /// Exit with status 2 when any PCS or POS differs by more than this (percentage points).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory holding one sub-directory per trial. Without it trials are kept in memory only.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Skeleton(a) => cmd_skeleton(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Reproduce(a) => cmd_reproduce(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Presets => {
            for p in presets::PRESETS {
                println!("{}", p.name);
            }
            Ok(())
        }
        Command::Serve(a) => cmd_serve(&a),
    }
}

pub fn format_skeleton(skeleton: &Skeleton) -> String {
    skeleton.probs().iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(" ")
}

fn cmd_skeleton(a: &SkeletonArgs) -> Result<(), CliError> {
    let skeleton = Skeleton::build(a.target, a.halfwidth, a.nu, a.k).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{}", format_skeleton(&skeleton));
    Ok(())
}

fn data_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

/// Resolves the study described by the simulate flags.
pub fn resolve_study(a: &SimulateArgs) -> Result<(String, StudyConfig), CliError> {
    let (source, text) = match (&a.config, &a.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| data_err(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
            (path.display().to_string(), text)
        }
        (None, Some(name)) => {
            let preset = presets::find(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
            (format!("preset:{name}"), preset.text.to_string())
        }
        _ => return Err(CliError::Usage("give either a config file or --preset".into())),
    };
    let mut file = StudyFile::from_toml(&text)?;
    if let Some(r) = a.replicates {
        file.replicates = r;
    }
    if let Some(s) = a.seed {
        file.base_seed = s;
    }
    let mut config = file.resolve()?;
    if !a.scenarios.is_empty() {
        for label in &a.scenarios {
            if !config.scenarios.iter().any(|s| &s.label == label) {
                return Err(CliError::Usage(format!("scenario {label:?} is not part of the study")));
            }
        }
        config.scenarios.retain(|s| a.scenarios.contains(&s.label));
    }
    Ok((source, config))
}

/// Runs every cell of `config`, reporting progress on stderr unless quiet.
pub fn run_study_verbose(config: &StudyConfig, quiet: bool) -> Result<Vec<CellResult>, CliError> {
    config.validate()?;
    let model = design_model(&config.design)?;
    let cells = config.cells();
    let mut results = Vec::with_capacity(cells.len());
    for (i, key) in cells.iter().enumerate() {
        let r = run_cell(config, *key, &model)?;
        if !quiet {
            eprintln!(
                "[{}/{}] {} {} phi={:.2}: PCS {:.1} +N {:.2}",
                i + 1,
                cells.len(),
                r.scenario.label,
                r.strategy,
                r.phi,
                r.oc.pcs,
                r.oc.mean_added
            );
        }
        results.push(r);
    }
    Ok(results)
}

/// Writes the CSV tables of a finished study into `out`.
pub fn write_tables(out: &Path, results: &[CellResult]) -> Result<Vec<Artifact>, CliError> {
    fs::create_dir_all(out).map_err(|e| data_err(anyhow::anyhow!("cannot create {}: {e}", out.display())))?;
    let mut files = vec![("summary.csv", summary_csv(results)), ("selection.csv", selection_csv(results))];
    if let Ok(report) = compare_strategies(results) {
        if !report.cells.is_empty() {
            files.push(("comparison.csv", comparison_csv(&report)));
        }
    }
    let mut artifacts = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        fs::write(&path, &text).map_err(|e| data_err(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        artifacts.push(Artifact::new(name, text.as_bytes()));
    }
    Ok(artifacts)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (source, config) = resolve_study(a)?;
    let results = run_study_verbose(&config, a.quiet)?;
    let artifacts = write_tables(&a.out, &results)?;
    let manifest = RunManifest::new(source, config, artifacts);
    let path = manifest.write(&a.out).map_err(data_err)?;
    if !a.quiet {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&a.manifest).map_err(data_err)?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.manifest.parent().unwrap_or_else(|| Path::new(".")).join("reproduced")
    });
    let results = run_study_verbose(&manifest.config, a.quiet)?;
    let artifacts = write_tables(&out, &results)?;
    let mismatched = manifest.mismatches(&artifacts);
    if mismatched.is_empty() {
        println!("all {} artifacts reproduced byte for byte in {}", manifest.artifacts.len(), out.display());
        Ok(())
    } else {
        Err(data_err(anyhow::anyhow!("artifacts differ from the manifest: {}", mismatched.join(", "))))
    }
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let summary = golden::read_summary(&a.summary).map_err(data_err)?;
    let reference = golden::read_reference(&a.reference).map_err(data_err)?;
    let rows = golden::compare(&summary, &reference);
    if rows.is_empty() {
        return Err(data_err(anyhow::anyhow!("no cells in common")));
    }
    print!("{}", golden::format_comparison(&rows));
    let worst = rows.iter().map(|r| r.max_abs_delta()).fold(0.0, f64::max);
    println!("{} cells, largest |delta| {:.1} pp", rows.len(), worst);
    match a.tolerance {
        Some(tol) if worst > tol => Err(data_err(anyhow::anyhow!("largest difference {worst:.1} exceeds {tol}"))),
        _ => Ok(()),
    }
}

fn cmd_serve(a: &ServeArgs) -> Result<(), CliError> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    let state = titecrm_service::open_state(a.store.clone()).map_err(data_err)?;
    if !state.is_persistent() {
        eprintln!("warning: no --store given, trials are kept in memory and lost on exit");
    }
    let runtime = tokio::runtime::Runtime::new().map_err(data_err)?;
    runtime.block_on(titecrm_service::serve(addr, state)).map_err(data_err)
}
