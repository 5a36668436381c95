//! Composition layer: the safety wrapper binding an environment to a filter,
//! the algorithm contract, reference policies and episode runners.

mod algorithm;
mod rollout;
mod wrapper;

pub use algorithm::{
    algorithm_from_state, load, save, Algorithm, AlgorithmState, HiddenState, LearnReport, RandomActionAlgorithm,
    RngState, ScriptedTeacher, ALGORITHM_MAGIC, ALGORITHM_SCHEMA_VERSION,
};
pub use rollout::{run_episode, run_episodes_vec, termination_breakdown, TerminationBreakdown};
pub use wrapper::{SafetyWrapper, VecSafetyWrapper, WrappedStep};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, SceneType, TerminationReason};
use crate::math::Vec2;
use crate::ops::{nonfinite, OpsError};
use crate::safety::SafetyError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("observation has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("corrupt algorithm artifact: {0}")]
    CorruptArtifact(String),
    #[error("unknown algorithm kind {0:?}")]
    UnknownAlgorithm(String),
}

/// One transition as stored in the episode dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(with = "nonfinite::vec")]
    pub observation: Vec<f64>,
    #[serde(with = "nonfinite::vec2")]
    pub nominal_action: Vec2,
    #[serde(with = "nonfinite::vec2")]
    pub safe_action: Vec2,
    pub modified: bool,
    #[serde(with = "nonfinite::scalar")]
    pub h_hard: f64,
    #[serde(with = "nonfinite::scalar")]
    pub h_soft: f64,
}

/// A complete episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub scene_type: SceneType,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub termination_reason: TerminationReason,
    pub length: usize,
}
