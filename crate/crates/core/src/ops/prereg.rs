//! Pre-registration: a campaign specification committed to disk before the
//! campaign runs. The SHA-256 of the committed bytes anchors every later
//! evaluation and halt decision.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{atomic_write, canonical_json, sha256_bytes, Metrics, OpsError};
use crate::env::SceneType;

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
}

impl Comparator {
    /// NaN never satisfies a comparison.
    pub fn holds(self, observed: f64, threshold: f64) -> bool {
        match self {
            Comparator::Ge => observed >= threshold,
            Comparator::Le => observed <= threshold,
            Comparator::Gt => observed > threshold,
            Comparator::Lt => observed < threshold,
        }
    }

    pub fn negate(self) -> Comparator {
        match self {
            Comparator::Ge => Comparator::Lt,
            Comparator::Le => Comparator::Gt,
            Comparator::Gt => Comparator::Le,
            Comparator::Lt => Comparator::Ge,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub metric: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreRegistration {
    pub name: String,
    pub created_at: String,
    pub criteria: Vec<Criterion>,
    pub attempt_distribution: BTreeMap<SceneType, f64>,
    #[serde(default)]
    pub predicted_yields: BTreeMap<SceneType, f64>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub sha256: String,
    pub artifact_path: String,
}

/// Sidecar written next to a committed artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact: String,
    pub sha256: String,
    pub committed_at: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionStatus {
    Pass,
    Fail,
    NotEvaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub metric: String,
    pub comparator: Comparator,
    pub threshold: f64,
    pub observed: Option<f64>,
    pub status: CriterionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub name: String,
    pub outcomes: Vec<CriterionOutcome>,
    /// True only when every criterion was evaluated and passed.
    pub overall_pass: bool,
}

pub fn utc_now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// `<artifact>.manifest.json`.
pub fn manifest_path_for(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

impl PreRegistration {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            created_at: utc_now(),
            criteria: Vec::new(),
            attempt_distribution: BTreeMap::new(),
            predicted_yields: BTreeMap::new(),
            notes: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), OpsError> {
        let bad = |m: String| Err(OpsError::InvalidPreRegistration(m));
        if self.attempt_distribution.is_empty() {
            return bad("attempt_distribution is empty".into());
        }
        for (scene, f) in &self.attempt_distribution {
            if !f.is_finite() || *f < 0.0 {
                return bad(format!("attempt fraction for {scene} is {f}"));
            }
        }
        let sum: f64 = self.attempt_distribution.values().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return bad(format!("attempt_distribution sums to {sum}, expected 1"));
        }
        for (scene, p) in &self.predicted_yields {
            if !p.is_finite() || !(0.0..=1.0).contains(p) {
                return bad(format!("predicted yield for {scene} is {p}"));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.criteria {
            if !seen.insert(c.metric.as_str()) {
                return bad(format!("criterion metric {} appears twice", c.metric));
            }
            if !c.threshold.is_finite() {
                return bad(format!("threshold for {} is not finite", c.metric));
            }
        }
        Ok(())
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>, OpsError> {
        canonical_json(self)
    }

    pub fn sha256(&self) -> Result<String, OpsError> {
        Ok(sha256_bytes(&self.canonical_bytes()?))
    }

    /// Atomically writes the canonical form and returns the hash of the
    /// exact on-disk bytes.
    pub fn commit_to_artifact(&self, path: &Path) -> Result<Commitment, OpsError> {
        self.validate()?;
        let bytes = self.canonical_bytes()?;
        atomic_write(path, &bytes)?;
        Ok(Commitment {
            sha256: sha256_bytes(&bytes),
            artifact_path: path.display().to_string(),
        })
    }

    /// Commits and writes the sidecar run manifest.
    pub fn commit_with_manifest(&self, path: &Path) -> Result<Commitment, OpsError> {
        let commitment = self.commit_to_artifact(path)?;
        let manifest = RunManifest {
            artifact: path.display().to_string(),
            sha256: commitment.sha256.clone(),
            committed_at: utc_now(),
        };
        atomic_write(&manifest_path_for(path), &serde_json::to_vec_pretty(&manifest)?)?;
        Ok(commitment)
    }

    pub fn evaluate(&self, metrics: &Metrics) -> EvaluationReport {
        let outcomes: Vec<CriterionOutcome> = self
            .criteria
            .iter()
            .map(|c| {
                let observed = metrics.get(&c.metric).copied();
                let status = match observed {
                    None => CriterionStatus::NotEvaluated,
                    Some(v) if c.comparator.holds(v, c.threshold) => CriterionStatus::Pass,
                    Some(_) => CriterionStatus::Fail,
                };
                CriterionOutcome {
                    metric: c.metric.clone(),
                    comparator: c.comparator,
                    threshold: c.threshold,
                    observed,
                    status,
                }
            })
            .collect();
        let overall_pass = outcomes.iter().all(|o| o.status == CriterionStatus::Pass);
        EvaluationReport {
            name: self.name.clone(),
            outcomes,
            overall_pass,
        }
    }
}

/// Loads a committed artifact, refusing it if its bytes no longer hash to
/// the value recorded in the sidecar manifest.
pub fn load_verified_artifact(path: &Path) -> Result<(PreRegistration, Commitment), OpsError> {
    let manifest_path = manifest_path_for(path);
    let manifest_bytes = std::fs::read(&manifest_path).map_err(|e| OpsError::io(&manifest_path, e))?;
    let manifest: RunManifest = serde_json::from_slice(&manifest_bytes)?;
    let bytes = std::fs::read(path).map_err(|e| OpsError::io(path, e))?;
    let actual = sha256_bytes(&bytes);
    if actual != manifest.sha256 {
        return Err(OpsError::Tampered {
            path: path.to_path_buf(),
            expected: manifest.sha256,
            actual,
        });
    }
    let prereg: PreRegistration = serde_json::from_slice(&bytes)?;
    prereg.validate()?;
    Ok((
        prereg,
        Commitment {
            sha256: actual,
            artifact_path: path.display().to_string(),
        },
    ))
}
