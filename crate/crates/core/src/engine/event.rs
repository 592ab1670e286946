//! Trial events and their line-delimited JSON log format.
//!
//! One event per line:
//!
//! ```text
//! {"time":0.0,"patient_id":1,"kind":"Enrolled","payload":{"dose":1}}
//! {"time":3.0,"patient_id":1,"kind":"ProgressionObserved"}
//! ```
//!
//! Times are absolute trial weeks. The same format is written by the
//! simulator's traces and by the conduct service's persistent store.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub time: f64,
    pub patient_id: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    Enrolled { dose: usize },
    DltObserved,
    ProgressionObserved,
    WindowCompleted,
}

impl EventKind {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, EventKind::Enrolled { .. })
    }
}

impl TrialEvent {
    pub fn enrolled(time: f64, patient_id: u32, dose: usize) -> Self {
        Self { time, patient_id, kind: EventKind::Enrolled { dose } }
    }

    pub fn dlt(time: f64, patient_id: u32) -> Self {
        Self { time, patient_id, kind: EventKind::DltObserved }
    }

    pub fn progression(time: f64, patient_id: u32) -> Self {
        Self { time, patient_id, kind: EventKind::ProgressionObserved }
    }

    pub fn completed(time: f64, patient_id: u32) -> Self {
        Self { time, patient_id, kind: EventKind::WindowCompleted }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl LogError {
    /// 1-based line of a parse failure.
    pub fn line(&self) -> Option<usize> {
        match self {
            LogError::Parse { line, .. } => Some(*line),
            LogError::Io(_) => None,
        }
    }
}

pub fn write_event<W: Write>(mut out: W, event: &TrialEvent) -> io::Result<()> {
    let line = serde_json::to_string(event).map_err(io::Error::other)?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")
}

pub fn write_log<W: Write>(mut out: W, events: &[TrialEvent]) -> io::Result<()> {
    for e in events {
        write_event(&mut out, e)?;
    }
    Ok(())
}

/// Reads a log, skipping blank lines. Errors carry the 1-based line number.
pub fn read_log<R: BufRead>(input: R) -> Result<Vec<TrialEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?;
        events.push(event);
    }
    Ok(events)
}
