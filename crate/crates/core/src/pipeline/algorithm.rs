//! Algorithm contract and the two non-learning reference policies.
//!
//! Checkpoint layout: 8-byte magic `PCBFALG1`, little-endian `u32` schema
//! version, little-endian `u64` payload length, canonical-JSON payload, and
//! a 32-byte SHA-256 of everything before it.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::env::{SafeEnv, OBS_DIM, OBS_GOAL_OFFSET};
use crate::math::Vec2;
use crate::ops::{atomic_write, canonical_json};

pub const ALGORITHM_MAGIC: &[u8; 8] = b"PCBFALG1";
pub const ALGORITHM_SCHEMA_VERSION: u32 = 1;

/// Per-environment recurrent state threaded through `predict`.
pub type HiddenState = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// 128-bit word position, decimal.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng, PipelineError> {
        let bad = |m: &str| PipelineError::CorruptArtifact(format!("rng state: {m}"));
        let bytes = hex::decode(&self.seed).map_err(|_| bad("seed is not hex"))?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| bad("seed must be 32 bytes"))?;
        let word_pos: u128 = self.word_pos.parse().map_err(|_| bad("word_pos is not an integer"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmState {
    pub kind: String,
    pub parameters: serde_json::Value,
    pub rng_state: Option<RngState>,
    pub hidden_state: Option<HiddenState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub updates: u64,
    pub message: String,
}

pub trait Algorithm {
    fn kind(&self) -> &'static str;

    /// Maps an observation to a nominal action. `hidden` is returned,
    /// possibly updated, for the next call on the same environment.
    fn predict(
        &mut self,
        observation: &[f64],
        hidden: Option<HiddenState>,
    ) -> Result<(Vec2, Option<HiddenState>), PipelineError>;

    fn learn(&mut self, env: &mut dyn SafeEnv, total_steps: u64) -> LearnReport;

    fn state_dict(&self) -> AlgorithmState;

    fn load_state_dict(&mut self, state: &AlgorithmState) -> Result<(), PipelineError>;
}

fn check_arity(observation: &[f64]) -> Result<(), PipelineError> {
    if observation.len() != OBS_DIM {
        return Err(PipelineError::ShapeMismatch {
            expected: OBS_DIM,
            got: observation.len(),
        });
    }
    Ok(())
}

fn nothing_to_learn(kind: &str) -> LearnReport {
    LearnReport {
        updates: 0,
        message: format!("{kind} has nothing to learn"),
    }
}

fn param(state: &AlgorithmState, key: &str) -> Result<f64, PipelineError> {
    state
        .parameters
        .get(key)
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| PipelineError::CorruptArtifact(format!("missing parameter {key}")))
}

/// Uniform actions over the action box from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomActionAlgorithm {
    v_max: f64,
    rng: ChaCha8Rng,
}

impl RandomActionAlgorithm {
    pub const KIND: &'static str = "random";

    pub fn new(v_max: f64, seed: u64) -> Self {
        Self {
            v_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Algorithm for RandomActionAlgorithm {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn predict(
        &mut self,
        observation: &[f64],
        hidden: Option<HiddenState>,
    ) -> Result<(Vec2, Option<HiddenState>), PipelineError> {
        check_arity(observation)?;
        let v = self.v_max;
        let action = Vec2::new(self.rng.random_range(-v..=v), self.rng.random_range(-v..=v));
        Ok((action, hidden))
    }

    fn learn(&mut self, _env: &mut dyn SafeEnv, _total_steps: u64) -> LearnReport {
        nothing_to_learn(Self::KIND)
    }

    fn state_dict(&self) -> AlgorithmState {
        AlgorithmState {
            kind: Self::KIND.into(),
            parameters: serde_json::json!({ "v_max": self.v_max }),
            rng_state: Some(RngState::capture(&self.rng)),
            hidden_state: None,
        }
    }

    fn load_state_dict(&mut self, state: &AlgorithmState) -> Result<(), PipelineError> {
        if state.kind != Self::KIND {
            return Err(PipelineError::UnknownAlgorithm(state.kind.clone()));
        }
        let rng = state
            .rng_state
            .as_ref()
            .ok_or_else(|| PipelineError::CorruptArtifact("random policy without rng state".into()))?
            .restore()?;
        self.v_max = param(state, "v_max")?;
        self.rng = rng;
        Ok(())
    }
}

/// Proportional go-to-goal controller: `k_p · (goal − position)`, clipped
/// to the action box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedTeacher {
    pub k_p: f64,
    pub v_max: f64,
}

impl ScriptedTeacher {
    pub const KIND: &'static str = "scripted";
    pub const DEFAULT_GAIN: f64 = 1.0;

    pub fn new(v_max: f64) -> Self {
        Self {
            k_p: Self::DEFAULT_GAIN,
            v_max,
        }
    }

    pub fn action(&self, observation: &[f64]) -> Vec2 {
        let offset = Vec2::new(observation[OBS_GOAL_OFFSET], observation[OBS_GOAL_OFFSET + 1]);
        (offset * self.k_p).clamp_box(self.v_max)
    }
}

impl Algorithm for ScriptedTeacher {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn predict(
        &mut self,
        observation: &[f64],
        hidden: Option<HiddenState>,
    ) -> Result<(Vec2, Option<HiddenState>), PipelineError> {
        check_arity(observation)?;
        Ok((self.action(observation), hidden))
    }

    fn learn(&mut self, _env: &mut dyn SafeEnv, _total_steps: u64) -> LearnReport {
        nothing_to_learn(Self::KIND)
    }

    fn state_dict(&self) -> AlgorithmState {
        AlgorithmState {
            kind: Self::KIND.into(),
            parameters: serde_json::json!({ "k_p": self.k_p, "v_max": self.v_max }),
            rng_state: None,
            hidden_state: None,
        }
    }

    fn load_state_dict(&mut self, state: &AlgorithmState) -> Result<(), PipelineError> {
        if state.kind != Self::KIND {
            return Err(PipelineError::UnknownAlgorithm(state.kind.clone()));
        }
        self.k_p = param(state, "k_p")?;
        self.v_max = param(state, "v_max")?;
        Ok(())
    }
}

/// Rebuilds a reference algorithm from its state.
pub fn algorithm_from_state(state: &AlgorithmState) -> Result<Box<dyn Algorithm>, PipelineError> {
    let mut algo: Box<dyn Algorithm> = match state.kind.as_str() {
        RandomActionAlgorithm::KIND => Box::new(RandomActionAlgorithm::new(1.0, 0)),
        ScriptedTeacher::KIND => Box::new(ScriptedTeacher::new(1.0)),
        other => return Err(PipelineError::UnknownAlgorithm(other.into())),
    };
    algo.load_state_dict(state)?;
    Ok(algo)
}

const HEADER_LEN: usize = 8 + 4 + 8;
const DIGEST_LEN: usize = 32;

pub fn save(state: &AlgorithmState, path: &Path) -> Result<(), PipelineError> {
    let payload = canonical_json(state)?;
    let mut bytes = Vec::with_capacity(HEADER_LEN + payload.len() + DIGEST_LEN);
    bytes.extend_from_slice(ALGORITHM_MAGIC);
    bytes.extend_from_slice(&ALGORITHM_SCHEMA_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&payload);
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    atomic_write(path, &bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<AlgorithmState, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| crate::ops::OpsError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let corrupt = |m: &str| PipelineError::CorruptArtifact(m.to_string());
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(corrupt("file too short"));
    }
    if &bytes[..8] != ALGORITHM_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != ALGORITHM_SCHEMA_VERSION {
        return Err(PipelineError::CorruptArtifact(format!(
            "unsupported schema version {version}"
        )));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    if bytes.len() != HEADER_LEN + len + DIGEST_LEN {
        return Err(corrupt("payload length does not match file size"));
    }
    let (body, digest) = bytes.split_at(HEADER_LEN + len);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    serde_json::from_slice(&body[HEADER_LEN..]).map_err(|e| PipelineError::CorruptArtifact(e.to_string()))
}
