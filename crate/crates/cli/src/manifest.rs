//! Run manifests: everything needed to regenerate a study's artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use titecrm_core::sim::StudyConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn new(path: &str, bytes: &[u8]) -> Self {
        Self { path: path.to_string(), sha256: format!("{:x}", Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    /// Config file path or `preset:<name>`.
    pub source: String,
    pub base_seed: u64,
    pub replicates: usize,
    /// The fully resolved study, scenarios included.
    pub config: StudyConfig,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(source: String, config: StudyConfig, artifacts: Vec<Artifact>) -> Self {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            tool: "titecrm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created_at,
            source,
            base_seed: config.base_seed,
            replicates: config.replicates,
            config,
            artifacts,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let manifest: Self = serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
        manifest.config.validate().context("manifest holds an invalid study")?;
        Ok(manifest)
    }

    /// Paths whose regenerated digest differs from, or is missing in, `artifacts`.
    pub fn mismatches(&self, artifacts: &[Artifact]) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| !artifacts.contains(a))
            .map(|a| a.path.clone())
            .collect()
    }
}
