//! Operational auditability: pre-registration commitments, watchdog
//! registries, failure forensics, crash-safe writes and dataset audits.

pub mod atomic;
pub mod audit;
pub mod canonical;
pub mod dataset;
pub mod forensics;
pub mod hash;
pub mod nonfinite;
pub mod prereg;
pub mod watchdog;

pub use atomic::{atomic_write, atomic_write_with_hook, AtomicFile, InjectedCrash, WriteStage};
pub use audit::{dataset_audit, AuditCheck, AuditReport, AuditSpec, Verdict};
pub use canonical::canonical_json;
pub use dataset::{read_dataset, DatasetHeader, DatasetWriter, DATASET_FORMAT, DATASET_VERSION};
pub use forensics::{ForensicsBuffer, ForensicsDump, ForensicsEntry, DEFAULT_FORENSICS_CAPACITY};
pub use hash::{sha256_bytes, sha256_file};
pub use prereg::{
    load_verified_artifact, manifest_path_for, Commitment, Comparator, Criterion, CriterionOutcome, CriterionStatus,
    EvaluationReport, PreRegistration, RunManifest,
};
pub use watchdog::{watchdogs_from_preregistration, Watchdog, WatchdogEvent, WatchdogRegistry};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Named scalar metrics, ordered by name.
pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Error)]
pub enum OpsError {
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("crash injected at {0:?}")]
    InjectedCrash(WriteStage),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid pre-registration: {0}")]
    InvalidPreRegistration(String),
    #[error("artifact {path} does not match its committed hash (expected {expected}, found {actual})")]
    Tampered {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("step {got} precedes previous step {last}")]
    NonMonotonicStep { last: u64, got: u64 },
    #[error("malformed dataset at line {line}: {detail}")]
    MalformedDataset { line: usize, detail: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl OpsError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        OpsError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
