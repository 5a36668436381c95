//! Rolling metric buffer dumped to disk when a pipeline halts.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::{atomic_write, prereg::utc_now, Metrics, OpsError, WatchdogEvent};

pub const DEFAULT_FORENSICS_CAPACITY: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForensicsEntry {
    pub step: u64,
    pub ts: String,
    #[serde(with = "super::nonfinite::map")]
    pub metrics: Metrics,
}

/// On-disk layout of a forensics dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForensicsDump {
    pub capacity: usize,
    pub dumped_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<WatchdogEvent>,
    pub entries: Vec<ForensicsEntry>,
}

#[derive(Debug, Clone)]
pub struct ForensicsBuffer {
    capacity: usize,
    entries: VecDeque<ForensicsEntry>,
}

impl Default for ForensicsBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_FORENSICS_CAPACITY)
    }
}

impl ForensicsBuffer {
    /// A zero capacity is bumped to one.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ForensicsEntry> {
        self.entries.iter()
    }

    pub fn record(&mut self, step: u64, metrics: Metrics) -> Result<(), OpsError> {
        if let Some(last) = self.entries.back() {
            if step < last.step {
                return Err(OpsError::NonMonotonicStep {
                    last: last.step,
                    got: step,
                });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(ForensicsEntry {
            step,
            ts: utc_now(),
            metrics,
        });
        Ok(())
    }

    pub fn to_dump(&self, trigger: Option<&WatchdogEvent>) -> ForensicsDump {
        ForensicsDump {
            capacity: self.capacity,
            dumped_at: utc_now(),
            trigger: trigger.cloned(),
            entries: self.entries.iter().cloned().collect(),
        }
    }

    /// Writes `forensics_<UTC basic ISO>_<step>.json` into `dir` atomically.
    /// The step is the trigger's step, else the newest entry's, else 0.
    pub fn dump(&self, dir: &Path, trigger: Option<&WatchdogEvent>) -> Result<PathBuf, OpsError> {
        let step = trigger
            .map(|t| t.step)
            .or_else(|| self.entries.back().map(|e| e.step))
            .unwrap_or(0);
        let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
        let path = dir.join(format!("forensics_{stamp}_{step}.json"));
        let bytes = serde_json::to_vec_pretty(&self.to_dump(trigger))?;
        atomic_write(&path, &bytes)?;
        Ok(path)
    }
}
