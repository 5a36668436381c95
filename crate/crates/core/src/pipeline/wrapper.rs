use super::PipelineError;
use crate::env::{SafeEnv, StepResult, VecAvoidanceEnv};
use crate::math::Vec2;
use crate::safety::{SafetyFilter, SafetyFilterResult};

#[derive(Debug, Clone, PartialEq)]
pub struct WrappedStep {
    pub step: StepResult,
    pub filter: SafetyFilterResult,
}

/// Runs every nominal action through a safety filter before it reaches the
/// environment.
pub struct SafetyWrapper<E, F> {
    env: E,
    filter: F,
}

impl<E: SafeEnv, F: SafetyFilter> SafetyWrapper<E, F> {
    pub fn new(env: E, filter: F) -> Self {
        Self { env, filter }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn filter(&self) -> &F {
        &self.filter
    }

    pub fn into_inner(self) -> (E, F) {
        (self.env, self.filter)
    }

    pub fn step(&mut self, nominal: Vec2) -> Result<WrappedStep, PipelineError> {
        let observation = self.env.observation();
        let state = self.env.safety_state();
        let filter = self.filter.filter_action(&observation, nominal, &state)?;
        let step = self.env.step(filter.safe_action)?;
        Ok(WrappedStep { step, filter })
    }
}

/// Batched counterpart of [`SafetyWrapper`]. Slot `i` behaves exactly like a
/// scalar wrapper around sub-environment `i`.
pub struct VecSafetyWrapper<F> {
    envs: VecAvoidanceEnv,
    filter: F,
}

impl<F: SafetyFilter> VecSafetyWrapper<F> {
    pub fn new(envs: VecAvoidanceEnv, filter: F) -> Self {
        Self { envs, filter }
    }

    pub fn envs(&self) -> &VecAvoidanceEnv {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut VecAvoidanceEnv {
        &mut self.envs
    }

    pub fn step(&mut self, nominals: &[Vec2]) -> Result<Vec<Result<WrappedStep, PipelineError>>, PipelineError> {
        let n = self.envs.num_envs();
        if nominals.len() != n {
            return Err(crate::env::EnvError::BatchShapeMismatch {
                expected: n,
                got: nominals.len(),
            }
            .into());
        }
        let states = self.envs.safety_states();
        let filtered = self.filter.filter_action_batch(&states, nominals)?;
        Ok(filtered
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let filter = f?;
                let step = self.envs.env_mut(i).step(filter.safe_action)?;
                Ok(WrappedStep { step, filter })
            })
            .collect())
    }
}
