//! Trial persistence: one directory per trial holding `meta.json` and an
//! append-only `events.jsonl` in the engine's event-log format.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use titecrm_core::crm::Skeleton;
use titecrm_core::engine::{read_log, write_event, TrialEvent, TrialState};
use titecrm_core::{DesignConfig, Strategy};

const META_FILE: &str = "meta.json";
const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unreadable trial metadata: {source}")]
    Meta {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

impl StoreError {
    /// 1-based log line at fault, when the failure is in an event log.
    pub fn line(&self) -> Option<usize> {
        match self {
            StoreError::Corrupt { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Everything needed to rebuild a trial besides its events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub trial_id: String,
    pub design: DesignConfig,
    pub strategy: Strategy,
    pub skeleton: Skeleton,
}

impl TrialMeta {
    pub fn empty_state(&self) -> titecrm_core::Result<TrialState> {
        TrialState::with_skeleton(self.design.clone(), self.skeleton.clone(), self.strategy)
    }
}

/// A trial directory store rooted at one path.
#[derive(Debug, Clone)]
pub struct DiskStore {
    root: PathBuf,
}

impl DiskStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn trial_dir(&self, trial_id: &str) -> PathBuf {
        self.root.join(trial_id)
    }

    pub fn create(&self, meta: &TrialMeta) -> Result<(), StoreError> {
        let dir = self.trial_dir(&meta.trial_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let events = dir.join(EVENTS_FILE);
        File::create(&events).map_err(io_err(&events))?;
        // meta.json last: a directory without it is an aborted creation
        let path = dir.join(META_FILE);
        let tmp = dir.join("meta.json.tmp");
        let text = serde_json::to_vec_pretty(meta).expect("trial metadata serializes");
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(())
    }

    pub fn append(&self, trial_id: &str, event: &TrialEvent) -> Result<(), StoreError> {
        let path = self.trial_dir(trial_id).join(EVENTS_FILE);
        let mut file = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        let mut line = Vec::new();
        write_event(&mut line, event).map_err(io_err(&path))?;
        file.write_all(&line).map_err(io_err(&path))?;
        file.sync_data().map_err(io_err(&path))
    }

    /// Loads and replays every trial under the root, sorted by id. Any
    /// unparsable or inapplicable log line aborts the load.
    pub fn load_all(&self) -> Result<Vec<(TrialMeta, TrialState)>, StoreError> {
        let mut dirs = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let path = entry.path();
            if path.is_dir() && path.join(META_FILE).exists() {
                dirs.push(path);
            }
        }
        dirs.sort();
        dirs.iter().map(|d| load_trial(d)).collect()
    }
}

fn load_trial(dir: &Path) -> Result<(TrialMeta, TrialState), StoreError> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read(&meta_path).map_err(io_err(&meta_path))?;
    let meta: TrialMeta =
        serde_json::from_slice(&text).map_err(|source| StoreError::Meta { path: meta_path.clone(), source })?;

    let log_path = dir.join(EVENTS_FILE);
    let file = File::open(&log_path).map_err(io_err(&log_path))?;
    let events = read_log(BufReader::new(file)).map_err(|e| match e.line() {
        Some(line) => StoreError::Corrupt { path: log_path.clone(), line, message: e.to_string() },
        None => StoreError::Io { path: log_path.clone(), source: std::io::Error::other(e.to_string()) },
    })?;

    let mut state = meta.empty_state().map_err(|e| StoreError::Corrupt {
        path: meta_path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    for (i, event) in events.iter().enumerate() {
        state.apply(event).map_err(|e| StoreError::Corrupt {
            path: log_path.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok((meta, state))
}
